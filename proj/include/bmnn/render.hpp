#ifndef BMNN_RENDER_HPP
#define BMNN_RENDER_HPP

#include <string>
#include <vector>

#include "bmnn/geometry.hpp"
#include "bmnn/rng.hpp"

namespace bmnn {

constexpr int kUpscale = 3;
constexpr int kWorkingSize = kFinalSize * kUpscale;  // 96, the rasterization grid
constexpr double kStrokeThickness = 3.0;  // px at the working scale
constexpr double kBlurSigma = 3.0;        // px at the working scale
constexpr int kBackgroundSteps[4] = {3, 7, 11, 15};
constexpr double kBgNodeLo = 0.1, kBgNodeHi = 0.9;
constexpr double kMixEpsLo = 0.1, kMixEpsHi = 0.4;

// Row-major grayscale raster, values in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h, 0.0) {}

    double& at(int row, int col) { return pixels[static_cast<size_t>(row) * width + col]; }
    double at(int row, int col) const { return pixels[static_cast<size_t>(row) * width + col]; }
};

struct MixParams {
    double epsilon = kMixEpsLo;
    bool negate = false;
};

// Binary 96x96 raster of the scene: stroke pixels 1.0, elsewhere 0.0.
// Scene coordinates are scaled by 3; strokes are 3 px thick with round caps.
Image rasterize_scene(const SceneSpec& scene);

// Separable Gaussian, kernel truncated at radius ceil(3*sigma) and
// renormalized to sum 1; borders handled by reflection.
Image gaussian_blur(const Image& img, double sigma = kBlurSigma);

// 3x3 block mean; both dimensions must be divisible by 3.
Image downsample3(const Image& img);

// Random background: grid nodes every `step` px (plus the final row/column
// when 31 is not a node) drawn uniform in [0.1, 0.9], remaining pixels
// bilinearly interpolated.
Image make_background(int step, Rng& rng);

// positive = eps*bg + (1-eps)*stim, clipped to [0,1]; negated variant is
// 1 - positive.
Image compose_stimulus(const Image& stim, const Image& bg, const MixParams& mix);

// Full pipeline: rasterize, blur, downsample.
Image render_scene(const SceneSpec& scene);

// 8-bit binary PGM (P5); values quantized by round(v*255).
void write_pgm(const Image& img, const std::string& path);

}  // namespace bmnn

#endif

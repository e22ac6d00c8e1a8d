#include "bmnn/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bmnn/errors.hpp"

namespace bmnn {

Image rasterize_scene(const SceneSpec& scene) {
    Image img(kWorkingSize, kWorkingSize);
    const double radius = kStrokeThickness / 2.0;
    for (const auto& seg : scene.segments) {
        Segment s{{seg.p0.x * kUpscale, seg.p0.y * kUpscale},
                  {seg.p1.x * kUpscale, seg.p1.y * kUpscale}};
        int c0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0.x, s.p1.x) - radius)) - 1);
        int c1 = std::min(kWorkingSize - 1,
                          static_cast<int>(std::ceil(std::max(s.p0.x, s.p1.x) + radius)) + 1);
        int r0 = std::max(0, static_cast<int>(std::floor(std::min(s.p0.y, s.p1.y) - radius)) - 1);
        int r1 = std::min(kWorkingSize - 1,
                          static_cast<int>(std::ceil(std::max(s.p0.y, s.p1.y) + radius)) + 1);
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                if (point_segment_distance({static_cast<double>(c), static_cast<double>(r)}, s) <=
                    radius)
                    img.at(r, c) = 1.0;
    }
    return img;
}

namespace {

// Mirror an out-of-range index back into [0, n); edge pixel not repeated.
int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

}  // namespace

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) throw InvalidInput("gaussian_blur: sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
        sum += kernel[k + radius];
    }
    for (double& w : kernel) w /= sum;

    Image tmp(img.width, img.height);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * img.at(r, reflect_index(c + k, img.width));
            tmp.at(r, c) = acc;
        }
    }
    Image out(img.width, img.height);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * tmp.at(reflect_index(r + k, img.height), c);
            out.at(r, c) = acc;
        }
    }
    return out;
}

Image downsample3(const Image& img) {
    if (img.width % 3 != 0 || img.height % 3 != 0)
        throw InvalidInput("downsample3: dimensions must be divisible by 3");
    Image out(img.width / 3, img.height / 3);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            double acc = 0.0;
            for (int dr = 0; dr < 3; ++dr)
                for (int dc = 0; dc < 3; ++dc) acc += img.at(3 * r + dr, 3 * c + dc);
            out.at(r, c) = acc / 9.0;
        }
    }
    return out;
}

Image make_background(int step, Rng& rng) {
    bool valid = false;
    for (int s : kBackgroundSteps) valid = valid || s == step;
    if (!valid) throw InvalidInput("make_background: step must be one of {3,7,11,15}");

    std::vector<int> nodes;
    for (int p = 0; p < kFinalSize; p += step) nodes.push_back(p);
    if (nodes.back() != kFinalSize - 1) nodes.push_back(kFinalSize - 1);
    const int nn = static_cast<int>(nodes.size());

    std::vector<double> vals(static_cast<size_t>(nn) * nn);
    for (int iy = 0; iy < nn; ++iy)
        for (int ix = 0; ix < nn; ++ix) vals[iy * nn + ix] = rng.uniform(kBgNodeLo, kBgNodeHi);

    // Interval index per pixel coordinate: iv[p] = i with nodes[i] <= p <= nodes[i+1].
    std::vector<int> iv(kFinalSize);
    for (int p = 0, i = 0; p < kFinalSize; ++p) {
        while (i + 1 < nn - 1 && p >= nodes[i + 1]) ++i;
        iv[p] = i;
    }

    Image out(kFinalSize, kFinalSize);
    for (int r = 0; r < kFinalSize; ++r) {
        int iy = iv[r];
        double fy = static_cast<double>(r - nodes[iy]) / (nodes[iy + 1] - nodes[iy]);
        for (int c = 0; c < kFinalSize; ++c) {
            int ix = iv[c];
            double fx = static_cast<double>(c - nodes[ix]) / (nodes[ix + 1] - nodes[ix]);
            double v00 = vals[iy * nn + ix], v01 = vals[iy * nn + ix + 1];
            double v10 = vals[(iy + 1) * nn + ix], v11 = vals[(iy + 1) * nn + ix + 1];
            out.at(r, c) = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                           fy * ((1 - fx) * v10 + fx * v11);
        }
    }
    return out;
}

Image compose_stimulus(const Image& stim, const Image& bg, const MixParams& mix) {
    if (stim.width != bg.width || stim.height != bg.height)
        throw InvalidInput("compose_stimulus: shape mismatch");
    if (mix.epsilon < kMixEpsLo || mix.epsilon > kMixEpsHi)
        throw InvalidInput("compose_stimulus: epsilon outside [0.1, 0.4]");
    Image out(stim.width, stim.height);
    for (size_t i = 0; i < out.pixels.size(); ++i) {
        double v = mix.epsilon * bg.pixels[i] + (1.0 - mix.epsilon) * stim.pixels[i];
        v = std::clamp(v, 0.0, 1.0);
        out.pixels[i] = mix.negate ? 1.0 - v : v;
    }
    return out;
}

Image render_scene(const SceneSpec& scene) {
    return downsample3(gaussian_blur(rasterize_scene(scene), kBlurSigma));
}

void write_pgm(const Image& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_pgm: cannot open " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double v : img.pixels)
        f.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    if (!f) throw IoError("write_pgm: write failed for " + path);
}

}  // namespace bmnn

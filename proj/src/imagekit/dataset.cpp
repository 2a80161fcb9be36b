#include "demarklab/imagekit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "demarklab/nn/rng.hpp"

namespace dml::imagekit {

namespace fs = std::filesystem;

void DatasetSpec::validate() const {
    if (height < ImageTensor::kMinDim || width < ImageTensor::kMinDim)
        throw ConfigError("dataset: target size below minimum image dimensions");
    if (count_limit && *count_limit <= 0) throw ConfigError("dataset: count limit must be positive");
    if (source == Source::directory) {
        if (path.empty()) throw ConfigError("dataset: directory source needs a path");
        if (!fs::is_directory(path)) throw NotFoundError("dataset: no such directory: " + path);
    } else {
        if (!count_limit) throw ConfigError("dataset: synthetic source needs a count limit");
    }
}

ImageTensor synth_image(std::uint64_t seed, std::uint64_t index, int height, int width) {
    nn::Rng rng(nn::Rng::mix(seed, index));
    std::vector<double> img(static_cast<std::size_t>(height) * width * 3);
    auto px = [&](int c, int y, int x) -> double& {
        return img[(static_cast<std::size_t>(c) * height + y) * width + x];
    };

    // gradient background between two random colors
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = rng.uniform(0.05, 0.95);
        c1[c] = rng.uniform(0.05, 0.95);
    }
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const double dx = std::cos(theta), dy = std::sin(theta);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double proj = (x * dx + y * dy) / (std::abs(dx) * (width - 1) + std::abs(dy) * (height - 1) + 1e-12);
            const double t = 0.5 + 0.5 * proj;
            for (int c = 0; c < 3; ++c) px(c, y, x) = c0[c] * (1.0 - t) + c1[c] * t;
        }

    // smooth blobs
    const int n_blobs = rng.uniform_int(2, 5);
    for (int b = 0; b < n_blobs; ++b) {
        const double cy = rng.uniform(0.0, height - 1.0);
        const double cx = rng.uniform(0.0, width - 1.0);
        const double sigma = rng.uniform(0.08, 0.25) * std::min(height, width);
        const double alpha = rng.uniform(0.3, 0.9);
        double col[3];
        for (int c = 0; c < 3; ++c) col[c] = rng.uniform(0.0, 1.0);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                const double w = alpha * std::exp(-d2 * inv2s2);
                for (int c = 0; c < 3; ++c) px(c, y, x) = px(c, y, x) * (1.0 - w) + col[c] * w;
            }
    }

    // hard-edged rectangles
    const int n_rects = rng.uniform_int(1, 3);
    for (int r = 0; r < n_rects; ++r) {
        const int rh = rng.uniform_int(height / 8, height / 2);
        const int rw = rng.uniform_int(width / 8, width / 2);
        const int ry = rng.uniform_int(0, height - rh);
        const int rx = rng.uniform_int(0, width - rw);
        const double alpha = rng.uniform(0.5, 1.0);
        double col[3];
        for (int c = 0; c < 3; ++c) col[c] = rng.uniform(0.0, 1.0);
        for (int y = ry; y < ry + rh; ++y)
            for (int x = rx; x < rx + rw; ++x)
                for (int c = 0; c < 3; ++c) px(c, y, x) = px(c, y, x) * (1.0 - alpha) + col[c] * alpha;
    }

    return ImageTensor(height, width, std::move(img));
}

std::vector<ImageTensor> synth_dataset(std::uint64_t seed, int count, int height, int width) {
    if (count < 1) throw DomainError("synth_dataset: count must be at least 1");
    std::vector<ImageTensor> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(synth_image(seed, static_cast<std::uint64_t>(i), height, width));
    return out;
}

Dataset::Dataset(DatasetSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.source == DatasetSpec::Source::directory) {
        for (const fs::directory_entry& e : fs::directory_iterator(spec_.path)) {
            if (!e.is_regular_file()) continue;
            std::string ext = e.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files_.push_back(e.path().string());
        }
        std::sort(files_.begin(), files_.end());
        if (files_.empty()) throw EmptyDatasetError("dataset: no images in " + spec_.path);
        count_ = files_.size();
        if (spec_.count_limit) count_ = std::min<std::size_t>(count_, static_cast<std::size_t>(*spec_.count_limit));
    } else {
        count_ = static_cast<std::size_t>(*spec_.count_limit);
    }
}

std::size_t Dataset::size() const { return count_; }

ImageTensor Dataset::get(std::size_t i) const {
    if (i >= count_) throw DomainError("dataset: index out of range");
    if (spec_.source == DatasetSpec::Source::directory)
        return load_image(files_[i], spec_.height, spec_.width);
    return synth_image(spec_.seed, static_cast<std::uint64_t>(i), spec_.height, spec_.width);
}

std::vector<ImageTensor> Dataset::all() const {
    std::vector<ImageTensor> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < count_; ++i) out.push_back(get(i));
    return out;
}

} // namespace dml::imagekit

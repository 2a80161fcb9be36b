#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "demarklab/imagekit/image.hpp"

namespace dml::imagekit {

struct DatasetSpec {
    enum class Source { directory, synthetic };

    Source source = Source::synthetic;
    std::string path;                 // directory source
    std::uint64_t seed = 0;           // synthetic source
    int height = 64;
    int width = 64;
    std::optional<int> count_limit;   // required for synthetic

    void validate() const;
};

// Procedurally generated image: gradient background, smooth blobs, and hard-
// edged rectangles. Bit-identical for equal (seed, index, size).
ImageTensor synth_image(std::uint64_t seed, std::uint64_t index, int height, int width);

std::vector<ImageTensor> synth_dataset(std::uint64_t seed, int count, int height, int width);

// Deterministic dataset view: lexicographic filename order for directories,
// index order for synthetic sources. Images are produced at spec target size.
class Dataset {
public:
    explicit Dataset(DatasetSpec spec);

    std::size_t size() const;
    ImageTensor get(std::size_t i) const;
    std::vector<ImageTensor> all() const;

    const DatasetSpec& spec() const { return spec_; }

private:
    DatasetSpec spec_;
    std::vector<std::string> files_; // directory source only
    std::size_t count_ = 0;
};

inline Dataset iterate_dataset(DatasetSpec spec) { return Dataset(std::move(spec)); }

} // namespace dml::imagekit

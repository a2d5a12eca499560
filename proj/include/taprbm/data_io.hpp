#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taprbm/model.hpp"

namespace taprbm {

/// Row-major sample matrix (samples x features) with optional labels.
struct Dataset {
    Matrix rows;
    std::vector<int> labels;  // empty when absent
    std::string source;

    Eigen::Index n_rows() const { return rows.rows(); }
    Eigen::Index n_features() const { return rows.cols(); }
};

/// Raw IDX container: unsigned-byte payload with up to 3 dimensions.
struct IdxTensor {
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> data;
};

/// Parses an IDX file: big-endian magic (0x00000803 images / 0x00000801
/// labels, i.e. ubyte element type), big-endian dimension sizes, raw payload.
IdxTensor read_idx(const std::string& path);

/// Writes the same container (used for fixtures and exports).
void write_idx(const IdxTensor& t, const std::string& path);

enum class Preprocess { Normalize01, Binarize };

/// Flattens trailing dimensions into features. Normalize01 divides by 255;
/// Binarize then thresholds strictly > 0.5.
Dataset preprocess(const IdxTensor& raw, Preprocess mode);

/// Applies the same transform to an already-real-valued matrix in [0,1].
Matrix binarize(const Matrix& values);

/// Delimited text reader (commas and/or whitespace). When rescale is set the
/// values are divided by their global maximum (if it exceeds 1).
Dataset read_delimited(const std::string& path, bool has_header = false, bool rescale = false);

/// Seeded minibatch index plan for one epoch: a fresh shuffle from
/// seed ^ epoch, consecutive chunks of size m, short final chunk kept.
std::vector<std::vector<Eigen::Index>> minibatches(Eigen::Index n_rows, Eigen::Index m,
                                                   std::uint64_t seed, std::uint64_t epoch);

}  // namespace taprbm

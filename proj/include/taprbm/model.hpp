#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "taprbm/units.hpp"

namespace taprbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Bipartite coupling model: visible and hidden sites with a dense coupling
/// matrix between them. No intra-layer couplings exist anywhere in the
/// structure.
struct GrbmModel {
    Matrix w;  // n_visible x n_hidden
    std::vector<UnitParams> vis;
    std::vector<UnitParams> hid;

    Eigen::Index n_visible() const { return static_cast<Eigen::Index>(vis.size()); }
    Eigen::Index n_hidden() const { return static_cast<Eigen::Index>(hid.size()); }
};

/// Layered model: layer 0 is visible, layers 1..L hidden. weights[l] couples
/// layer l to layer l+1. A single hidden layer is exactly a GrbmModel.
struct DbmModel {
    std::vector<std::vector<UnitParams>> layers;
    std::vector<Matrix> weights;

    std::size_t n_hidden_layers() const { return weights.size(); }
};

void validate(const GrbmModel& m);
void validate(const DbmModel& m);

DbmModel to_dbm(const GrbmModel& m);
GrbmModel to_grbm(const DbmModel& m);  // requires exactly one hidden layer

/// Fresh model: W ~ N(0, sigma^2) from the seeded generator, visible priors
/// moment-matched to the data sample (degenerate pixels clamped), hidden
/// priors at the family's neutral values.
GrbmModel init_model(Eigen::Index n_hidden, UnitFamily vis_family, UnitFamily hid_family,
                     const Matrix& data_sample, double sigma, std::uint64_t seed);

struct ModelMeta {
    std::uint32_t epoch = 0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

void save_model(const DbmModel& m, const std::string& path, const ModelMeta& meta = {});
void save_model(const GrbmModel& m, const std::string& path, const ModelMeta& meta = {});

struct LoadedModel {
    DbmModel model;
    ModelMeta meta;
};
LoadedModel load_model(const std::string& path);

std::uint32_t crc32(const void* data, std::size_t n, std::uint32_t seed = 0);

}  // namespace taprbm

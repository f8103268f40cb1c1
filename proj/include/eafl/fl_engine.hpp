#pragma once

/// @file fl_engine.hpp
/// @brief Synthetic non-IID task, local softmax-regression SGD, and FedAvg/YoGi aggregation.
///
/// The shared model is a d x L weight matrix (row per label, no bias) stored row-major in a flat
/// vector. Every client shard holds samples from exactly `labels_per_client` labels; features are
/// drawn from unit-variance Gaussian clusters whose means sit on random vertices of the
/// {-s,+s}^d lattice.

#include <eafl/device_energy.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace eafl {

struct TaskConfig {
    int num_labels = 35;
    int labels_per_client = 4;
    int feature_dim = 32;
    int samples_per_client = 100;
    int test_samples_per_label = 50;
    double label_noise = 0.0;
    /// Half-spacing of the lattice: cluster means have coordinates +-lattice_scale.
    double lattice_scale = 0.8;

    void validate() const;
};

/// Row-major feature matrix plus integer labels.
struct DataShard {
    int feature_dim = 0;
    std::vector<double> features;
    std::vector<int> labels;

    [[nodiscard]] std::size_t size() const { return labels.size(); }
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {features.data() + i * static_cast<std::size_t>(feature_dim),
                static_cast<std::size_t>(feature_dim)};
    }
};

struct FleetData {
    std::vector<DataShard> shards;
    DataShard test_set;
};

[[nodiscard]] FleetData generate_fleet_data(const TaskConfig& task, int n_clients,
                                            std::uint64_t seed);

/// Fills `probs` (size L) with the softmax of W x.
void softmax_probs(std::span<const double> weights, std::span<const double> x,
                   std::span<double> probs);

/// Cross-entropy of one sample.
[[nodiscard]] double sample_loss(std::span<const double> weights, std::span<const double> x,
                                 int label);

/// Mean cross-entropy over `indices` of the shard; accumulates the mean gradient into `grad`
/// (overwritten). Returns the mean loss.
double loss_and_gradient(std::span<const double> weights, const DataShard& shard,
                         std::span<const std::size_t> indices, std::span<double> grad);

struct TrainResult {
    std::vector<double> delta;
    double avg_loss = 0.0;
    double sum_sq_loss = 0.0;
    std::int64_t samples_used = 0;
};

/// Mini-batch SGD over the shard. Loss statistics come from a forward pass with the received
/// weights, before any update.
[[nodiscard]] TrainResult local_train(std::span<const double> weights, const DataShard& shard,
                                      double lr, int local_epochs, int batch_size,
                                      std::uint64_t seed);

struct WeightedDelta {
    ClientId client_id = 0;
    std::vector<double> delta;
    std::int64_t samples = 0;
};

/// Sample-weighted mean of deltas, reduced in ascending client id order. std::nullopt for an
/// empty input (the round cannot be aggregated).
[[nodiscard]] std::optional<std::vector<double>> aggregate_fedavg(std::vector<WeightedDelta> deltas);

struct YogiParams {
    double eta = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double tau = 1e-3;

    void validate() const;
};

struct ModelState {
    std::vector<double> weights;
    std::vector<double> server_m;
    std::vector<double> server_v;

    /// Zero weights and momentum with the second moment at tau^2.
    [[nodiscard]] static ModelState zeros(std::size_t dimension, double tau);
};

[[nodiscard]] ModelState yogi_server_update(ModelState model, std::span<const double> agg_delta,
                                            const YogiParams& params);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
};

[[nodiscard]] EvalResult evaluate(std::span<const double> weights, const DataShard& test_set);

} // namespace eafl

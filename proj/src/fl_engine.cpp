#include <eafl/fl_engine.hpp>

#include <eafl/rng.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace eafl {

void TaskConfig::validate() const {
    if (num_labels < 2) {
        throw std::invalid_argument("num_labels must be >= 2");
    }
    if (labels_per_client < 1 || labels_per_client > num_labels) {
        throw std::invalid_argument("labels_per_client must lie in [1, num_labels]");
    }
    if (feature_dim < 1) {
        throw std::invalid_argument("feature_dim must be >= 1");
    }
    if (samples_per_client < labels_per_client) {
        throw std::invalid_argument("samples_per_client must be >= labels_per_client");
    }
    if (test_samples_per_label < 1) {
        throw std::invalid_argument("test_samples_per_label must be >= 1");
    }
    if (!(lattice_scale > 0.0)) {
        throw std::invalid_argument("lattice_scale must be > 0");
    }
    if (!(label_noise >= 0.0 && label_noise < 1.0)) {
        throw std::invalid_argument("label_noise must lie in [0,1)");
    }
}

namespace {

double standard_normal(Rng& rng) {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void append_sample(DataShard& shard, const std::vector<double>& means, int label, Rng& rng) {
    const auto d = static_cast<std::size_t>(shard.feature_dim);
    for (std::size_t j = 0; j < d; ++j) {
        shard.features.push_back(means[static_cast<std::size_t>(label) * d + j] +
                                 standard_normal(rng));
    }
    shard.labels.push_back(label);
}

std::size_t label_count(std::span<const double> weights, std::size_t dim) {
    if (dim == 0 || weights.size() % dim != 0) {
        throw std::invalid_argument("weight vector does not match feature dimension");
    }
    return weights.size() / dim;
}

} // namespace

FleetData generate_fleet_data(const TaskConfig& task, int n_clients, std::uint64_t seed) {
    task.validate();
    if (n_clients < 1) {
        throw std::invalid_argument("n_clients must be >= 1");
    }
    const auto d = static_cast<std::size_t>(task.feature_dim);
    const auto num_labels = static_cast<std::size_t>(task.num_labels);

    auto lattice_rng = make_rng(seed, 0, RngPurpose::Data, 0);
    std::vector<double> means(num_labels * d);
    for (auto& m : means) {
        m = (lattice_rng() & 1U) ? task.lattice_scale : -task.lattice_scale;
    }

    FleetData data;
    data.shards.reserve(static_cast<std::size_t>(n_clients));
    std::vector<int> all_labels(num_labels);
    std::iota(all_labels.begin(), all_labels.end(), 0);

    for (int c = 0; c < n_clients; ++c) {
        auto rng = make_rng(seed, 0, RngPurpose::Data, static_cast<std::uint64_t>(c) + 1);
        auto pool = all_labels;
        for (int i = 0; i < task.labels_per_client; ++i) {
            const auto j = static_cast<std::size_t>(i) +
                           static_cast<std::size_t>(uniform_below(rng, num_labels - static_cast<std::size_t>(i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        std::vector<int> owned(pool.begin(), pool.begin() + task.labels_per_client);
        std::sort(owned.begin(), owned.end());

        DataShard shard;
        shard.feature_dim = task.feature_dim;
        shard.features.reserve(static_cast<std::size_t>(task.samples_per_client) * d);
        shard.labels.reserve(static_cast<std::size_t>(task.samples_per_client));
        for (int s = 0; s < task.samples_per_client; ++s) {
            // The first pass guarantees every owned label is present.
            const int label = s < task.labels_per_client
                                  ? owned[static_cast<std::size_t>(s)]
                                  : owned[uniform_below(rng, owned.size())];
            append_sample(shard, means, label, rng);
            if (s >= task.labels_per_client && uniform01(rng) < task.label_noise) {
                shard.labels.back() = owned[uniform_below(rng, owned.size())];
            }
        }
        data.shards.push_back(std::move(shard));
    }

    auto test_rng = make_rng(seed, 0, RngPurpose::Data, static_cast<std::uint64_t>(n_clients) + 1);
    data.test_set.feature_dim = task.feature_dim;
    for (int s = 0; s < task.test_samples_per_label; ++s) {
        for (int label = 0; label < task.num_labels; ++label) {
            append_sample(data.test_set, means, label, test_rng);
        }
    }
    return data;
}

void softmax_probs(std::span<const double> weights, std::span<const double> x,
                   std::span<double> probs) {
    const std::size_t dim = x.size();
    const std::size_t labels = label_count(weights, dim);
    if (probs.size() != labels) {
        throw std::invalid_argument("probability buffer has the wrong size");
    }
    double top = -INFINITY;
    for (std::size_t l = 0; l < labels; ++l) {
        double z = 0.0;
        const double* w = weights.data() + l * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            z += w[j] * x[j];
        }
        probs[l] = z;
        top = std::max(top, z);
    }
    double total = 0.0;
    for (auto& p : probs) {
        p = std::exp(p - top);
        total += p;
    }
    for (auto& p : probs) {
        p /= total;
    }
}

double sample_loss(std::span<const double> weights, std::span<const double> x, int label) {
    std::vector<double> probs(label_count(weights, x.size()));
    softmax_probs(weights, x, probs);
    // Clamp keeps a saturated prediction from returning an infinite loss.
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

double loss_and_gradient(std::span<const double> weights, const DataShard& shard,
                         std::span<const std::size_t> indices, std::span<double> grad) {
    const auto dim = static_cast<std::size_t>(shard.feature_dim);
    const std::size_t labels = label_count(weights, dim);
    if (grad.size() != weights.size()) {
        throw std::invalid_argument("gradient buffer has the wrong size");
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    if (indices.empty()) {
        return 0.0;
    }

    std::vector<double> probs(labels);
    double loss = 0.0;
    for (const auto i : indices) {
        const auto x = shard.row(i);
        const auto y = static_cast<std::size_t>(shard.labels[i]);
        softmax_probs(weights, x, probs);
        loss -= std::log(std::max(probs[y], 1e-300));
        probs[y] -= 1.0;
        for (std::size_t l = 0; l < labels; ++l) {
            double* g = grad.data() + l * dim;
            const double coeff = probs[l];
            for (std::size_t j = 0; j < dim; ++j) {
                g[j] += coeff * x[j];
            }
        }
    }
    const double scale = 1.0 / static_cast<double>(indices.size());
    for (auto& g : grad) {
        g *= scale;
    }
    return loss * scale;
}

TrainResult local_train(std::span<const double> weights, const DataShard& shard, double lr,
                        int local_epochs, int batch_size, std::uint64_t seed) {
    if (shard.size() == 0) {
        throw std::invalid_argument("cannot train on an empty shard");
    }
    if (!(lr > 0.0) || local_epochs < 1 || batch_size < 1) {
        throw std::invalid_argument("local_train needs lr > 0, epochs >= 1, batch >= 1");
    }
    const auto dim = static_cast<std::size_t>(shard.feature_dim);
    (void)label_count(weights, dim);

    TrainResult result;
    for (std::size_t i = 0; i < shard.size(); ++i) {
        const double loss = sample_loss(weights, shard.row(i), shard.labels[i]);
        result.avg_loss += loss;
        result.sum_sq_loss += loss * loss;
    }
    result.avg_loss /= static_cast<double>(shard.size());

    std::vector<double> local(weights.begin(), weights.end());
    std::vector<double> grad(local.size());
    std::vector<std::size_t> order(shard.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = Rng(seed);
    const auto batch = static_cast<std::size_t>(batch_size);

    for (int epoch = 0; epoch < local_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[uniform_below(rng, i)]);
        }
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const auto count = std::min(batch, order.size() - start);
            loss_and_gradient(local, shard, std::span(order).subspan(start, count), grad);
            for (std::size_t j = 0; j < local.size(); ++j) {
                local[j] -= lr * grad[j];
            }
            result.samples_used += static_cast<std::int64_t>(count);
        }
    }

    result.delta.resize(local.size());
    for (std::size_t j = 0; j < local.size(); ++j) {
        result.delta[j] = local[j] - weights[j];
    }
    return result;
}

std::optional<std::vector<double>> aggregate_fedavg(std::vector<WeightedDelta> deltas) {
    if (deltas.empty()) {
        return std::nullopt;
    }
    std::sort(deltas.begin(), deltas.end(),
              [](const WeightedDelta& a, const WeightedDelta& b) { return a.client_id < b.client_id; });

    const std::size_t dim = deltas.front().delta.size();
    double total = 0.0;
    for (const auto& d : deltas) {
        if (d.delta.size() != dim) {
            throw std::invalid_argument("deltas differ in dimension");
        }
        if (d.samples <= 0) {
            throw std::invalid_argument("delta weight must be positive");
        }
        total += static_cast<double>(d.samples);
    }

    std::vector<double> out(dim, 0.0);
    for (const auto& d : deltas) {
        const double w = static_cast<double>(d.samples) / total;
        for (std::size_t j = 0; j < dim; ++j) {
            out[j] += w * d.delta[j];
        }
    }
    return out;
}

void YogiParams::validate() const {
    if (!(eta > 0.0)) {
        throw std::invalid_argument("yogi eta must be > 0");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0)) {
        throw std::invalid_argument("yogi beta1 must lie in [0,1)");
    }
    // beta2 = 1 freezes the second moment, which is a legitimate degenerate setting.
    if (!(beta2 >= 0.0 && beta2 <= 1.0)) {
        throw std::invalid_argument("yogi beta2 must lie in [0,1]");
    }
    if (!(tau > 0.0)) {
        throw std::invalid_argument("yogi tau must be > 0");
    }
}

ModelState ModelState::zeros(std::size_t dimension, double tau) {
    return {std::vector<double>(dimension, 0.0), std::vector<double>(dimension, 0.0),
            std::vector<double>(dimension, tau * tau)};
}

ModelState yogi_server_update(ModelState model, std::span<const double> agg_delta,
                              const YogiParams& params) {
    params.validate();
    const std::size_t dim = model.weights.size();
    if (model.server_m.size() != dim || model.server_v.size() != dim || agg_delta.size() != dim) {
        throw std::invalid_argument("yogi state and delta dimensions differ");
    }
    for (std::size_t j = 0; j < dim; ++j) {
        const double g = agg_delta[j];
        const double g2 = g * g;
        auto& m = model.server_m[j];
        auto& v = model.server_v[j];
        m = params.beta1 * m + (1.0 - params.beta1) * g;
        const double diff = v - g2;
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        v = v - (1.0 - params.beta2) * g2 * sign;
        model.weights[j] += params.eta * m / (std::sqrt(v) + params.tau);
    }
    return model;
}

EvalResult evaluate(std::span<const double> weights, const DataShard& test_set) {
    if (test_set.size() == 0) {
        throw std::invalid_argument("cannot evaluate on an empty test set");
    }
    const auto dim = static_cast<std::size_t>(test_set.feature_dim);
    std::vector<double> probs(label_count(weights, dim));
    std::size_t correct = 0;
    double loss = 0.0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        softmax_probs(weights, test_set.row(i), probs);
        const auto best = static_cast<std::size_t>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
        const auto y = static_cast<std::size_t>(test_set.labels[i]);
        correct += best == y ? 1 : 0;
        loss -= std::log(std::max(probs[y], 1e-300));
    }
    const double n = static_cast<double>(test_set.size());
    return {static_cast<double>(correct) / n, loss / n};
}

} // namespace eafl

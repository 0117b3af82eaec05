#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "habnn/backward.hpp"
#include "habnn/data.hpp"
#include "habnn/forward.hpp"
#include "habnn/layer.hpp"

namespace habnn {

using Network = std::vector<LayerState>;

struct NetworkConfig {
  /// Input dimension, hidden widths, output width (1), in order.
  std::vector<std::size_t> layer_widths;
  double nu0 = 12.0;
  double scale0 = 0.01;
  double noise_var = 1.0;
  std::uint64_t seed = 0;

  /// Widths {input_dim, hidden..., 1}.
  static NetworkConfig with_hidden(std::size_t input_dim, std::span<const std::size_t> hidden);
  void validate() const;
};

/// Raised when a numeric failure interrupts training; carries the index of
/// the offending sample.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t sample_index, const std::string& what);
  std::size_t sample_index() const { return sample_index_; }

 private:
  std::size_t sample_index_;
};

/// Predictive law for one sample, recorded before the update it triggers.
struct SampleLog {
  double y = 0.0;
  UnivariateT predictive;
  double predictive_variance = 0.0;
};

struct TrainResult {
  Network network;
  std::vector<SampleLog> log;
};

/// Standard-normal weight means, scale0 on every scale, nu0 everywhere.
Network init_network(const NetworkConfig& config);

/// Single pass over the rows in order: forward, then backward, per sample.
TrainResult train_online(Network network, const Dataset& data, double noise_var,
                         const BackwardOptions& options = {});

UnivariateT predict(std::span<const LayerState> network, std::span<const double> x,
                    double noise_var);

/// Predictive variance (epistemic plus noise) alongside the t law.
ForwardResult predict_full(std::span<const LayerState> network, std::span<const double> x,
                           double noise_var);

}  // namespace habnn

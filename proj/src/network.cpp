#include "habnn/network.hpp"

#include <random>
#include <string>

namespace habnn {

LayerState::LayerState(std::size_t fan_in_, std::size_t fan_out_, double nu, double tau2)
    : w_mu(fan_out_, fan_in_ + 1, 0.0),
      w_tau2(fan_out_, fan_in_ + 1, tau2),
      nu_w(nu),
      fan_in(fan_in_),
      fan_out(fan_out_) {}

void LayerState::validate() const {
  if (fan_in == 0 || fan_out == 0) throw std::invalid_argument("LayerState: empty layer");
  if (w_mu.rows() != fan_out || w_mu.cols() != fan_in + 1 || w_tau2.rows() != fan_out ||
      w_tau2.cols() != fan_in + 1) {
    throw std::invalid_argument("LayerState: weight shape does not match dimensions");
  }
  if (!(nu_w > 2.0)) throw std::domain_error("LayerState: nu must exceed 2");
  for (double s : w_tau2.data()) {
    if (!(s > 0.0)) throw std::domain_error("LayerState: weight scales must be positive");
  }
}

NetworkConfig NetworkConfig::with_hidden(std::size_t input_dim,
                                         std::span<const std::size_t> hidden) {
  NetworkConfig config;
  config.layer_widths.push_back(input_dim);
  config.layer_widths.insert(config.layer_widths.end(), hidden.begin(), hidden.end());
  config.layer_widths.push_back(1);
  return config;
}

void NetworkConfig::validate() const {
  if (layer_widths.size() < 2) {
    throw std::invalid_argument("network needs an input width and at least one layer");
  }
  for (std::size_t w : layer_widths) {
    if (w == 0) throw std::invalid_argument("layer widths must be positive");
  }
  if (layer_widths.back() != 1) throw std::invalid_argument("output width must be 1");
  if (!(nu0 > 2.0)) throw std::domain_error("nu0 must exceed 2");
  if (!(scale0 > 0.0)) throw std::domain_error("scale0 must be positive");
  if (!(noise_var >= 0.0)) throw std::domain_error("noise variance must be non-negative");
}

TrainingError::TrainingError(std::size_t sample_index, const std::string& what)
    : std::runtime_error("sample " + std::to_string(sample_index) + ": " + what),
      sample_index_(sample_index) {}

Network init_network(const NetworkConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Network net;
  net.reserve(config.layer_widths.size() - 1);
  for (std::size_t l = 0; l + 1 < config.layer_widths.size(); ++l) {
    LayerState layer(config.layer_widths[l], config.layer_widths[l + 1], config.nu0,
                     config.scale0);
    for (double& w : layer.w_mu.data()) w = normal(rng);
    net.push_back(std::move(layer));
  }
  return net;
}

TrainResult train_online(Network network, const Dataset& data, double noise_var,
                         const BackwardOptions& options) {
  TrainResult result;
  result.log.reserve(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    try {
      ForwardResult fwd = forward_pass(network, data.row(n), noise_var);
      result.log.push_back({data.targets[n], fwd.predictive, fwd.predictive_variance});
      backward_pass(network, fwd.trace, data.targets[n], noise_var, options);
    } catch (const std::exception& e) {
      throw TrainingError(n, e.what());
    }
  }
  result.network = std::move(network);
  return result;
}

UnivariateT predict(std::span<const LayerState> network, std::span<const double> x,
                    double noise_var) {
  return forward_pass(network, x, noise_var).predictive;
}

ForwardResult predict_full(std::span<const LayerState> network, std::span<const double> x,
                           double noise_var) {
  return forward_pass(network, x, noise_var);
}

}  // namespace habnn

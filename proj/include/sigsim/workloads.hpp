#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigsim/filestore.hpp"
#include "sigsim/signals.hpp"

namespace sigsim {

// --------------------------------------------------------------------------
// Config-reloading server (web server upgraded via signals)
// --------------------------------------------------------------------------

inline constexpr const char* kConfigPath = "/etc/server/config";
inline constexpr const char* kBinaryPath = "/usr/bin/server";

inline constexpr HandlerActionId kReloadConfigAction = 1;
inline constexpr HandlerActionId kReloadBinaryAction = 2;

/// A server that re-reads its (encrypted) configuration on SIGHUP and its
/// binary on SIGUSR1, without restarting. Versions change only inside the
/// reload handlers or the initial load.
class ConfigServer {
 public:
  ConfigServer() {
    files_.write(kConfigPath, "v1");
    files_.write(kBinaryPath, "v1");
    config_version_ = "v1";
    binary_version_ = "v1";
  }

  SecureFileStore& files() { return files_; }
  const std::string& config_version() const { return config_version_; }
  const std::string& binary_version() const { return binary_version_; }

  void reload_config() { reload(kConfigPath, config_version_); }
  void reload_binary() { reload(kBinaryPath, binary_version_); }

 private:
  // Missing file: the handler gives up and keeps the running version.
  void reload(const std::string& path, std::string& slot) {
    auto v = files_.read_version(path);
    if (v.has_value()) slot = *v;
  }

  SecureFileStore files_;
  std::string config_version_;
  std::string binary_version_;
};

// --------------------------------------------------------------------------
// Debug-socket server (leaks its key material once a debug port opens)
// --------------------------------------------------------------------------

/// Server whose language runtime opens a debug socket on SIGUSR1. The secret
/// can leave the process only while that port is open.
class DebugServer {
 public:
  explicit DebugServer(std::string secret) : secret_(std::move(secret)) {}

  bool debug_port_open() const { return port_open_; }
  bool leaked() const { return leaked_; }

  void open_debug_port() { port_open_ = true; }

  /// Ordinary service traffic; never touches the secret.
  void serve_request() { ++requests_served_; }
  std::uint64_t requests_served() const { return requests_served_; }

  std::optional<std::string> attacker_connect() {
    if (!port_open_) return std::nullopt;
    leaked_ = true;
    return secret_;
  }

 private:
  std::string secret_;
  bool port_open_ = false;
  bool leaked_ = false;
  std::uint64_t requests_served_ = 0;
};

// --------------------------------------------------------------------------
// Streaming mean/covariance estimator (catch-block reverts on exception)
// --------------------------------------------------------------------------

struct EstimatorState {
  std::vector<double> mean;
  std::vector<std::vector<double>> covariance;
  int add_count = 0;
};

inline EstimatorState make_estimator(std::size_t dim) {
  EstimatorState s;
  s.mean.assign(dim, 0.0);
  s.covariance.assign(dim, std::vector<double>(dim, 0.0));
  return s;
}

inline std::vector<double> batch_mean(
    const std::vector<std::vector<double>>& batch) {
  const std::size_t dim = batch.front().size();
  std::vector<double> m(dim, 0.0);
  for (const auto& v : batch) {
    for (std::size_t i = 0; i < dim; ++i) m[i] += v[i];
  }
  for (auto& x : m) x /= static_cast<double>(batch.size());
  return m;
}

/// Population covariance around the given mean.
inline std::vector<std::vector<double>> batch_covariance(
    const std::vector<double>& mean,
    const std::vector<std::vector<double>>& batch) {
  const std::size_t dim = mean.size();
  std::vector<std::vector<double>> cov(dim, std::vector<double>(dim, 0.0));
  for (const auto& v : batch) {
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        cov[i][j] += (v[i] - mean[i]) * (v[j] - mean[j]);
      }
    }
  }
  for (auto& row : cov) {
    for (auto& x : row) x /= static_cast<double>(batch.size());
  }
  return cov;
}

/// Replaces the estimate with the batch statistics. When an arithmetic
/// exception lands mid-update, the catch block puts the old mean back and the
/// covariance is never replaced:
///
///   orig = mean
///   try   { mean = batch_mean(...); covariance = batch_covariance(...); }
///   catch { mean = orig; }
inline void set_using_data(EstimatorState& state,
                           const std::vector<std::vector<double>>& batch,
                           bool exception_mid_update) {
  if (batch.empty()) {
    throw std::invalid_argument("set_using_data: batch must be non-empty");
  }
  const std::vector<double> orig_mean = state.mean;
  ++state.add_count;
  std::vector<double> new_mean = batch_mean(batch);
  if (exception_mid_update) {
    state.mean = orig_mean;
    return;
  }
  state.covariance = batch_covariance(new_mean, batch);
  state.mean = std::move(new_mean);
}

}  // namespace sigsim

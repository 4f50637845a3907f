#pragma once

#include <cstdio>
#include <string>

#include "bornsim/device.hpp"
#include "bornsim/estimation.hpp"
#include "bornsim/hilbert.hpp"
#include "bornsim/typeclass.hpp"

#include "json.hpp"

namespace bornsim {

inline constexpr const char* kVersion = "0.1.0";

namespace serialize {

using nlohmann::json;

/// %.17g: enough digits to round-trip a double exactly; C locale, dot decimal.
inline std::string float17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json to_json(const hilbert::SubsystemLayout& layout) {
  json parts = json::array();
  for (const auto& s : layout.subsystems()) parts.push_back({{"name", s.name}, {"dim", s.dim}});
  return parts;
}

/// Amplitudes as [re, im] pairs plus the layout descriptor.
inline json to_json(const hilbert::StateVector& state) {
  json amps = json::array();
  for (const cplx& a : state.amplitudes()) amps.push_back({a.real(), a.imag()});
  return json{{"layout", to_json(state.layout())}, {"amplitudes", amps}};
}

inline json to_json(const estimation::CoefficientEstimate& est) {
  return json{{"c0_hat", est.c0_hat},
              {"c1_hat", est.c1_hat},
              {"sample_size", est.sample_size},
              {"standard_error", est.standard_error}};
}

inline json to_json(const estimation::CascadeEstimates& est) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"c0_sq", est.c0_sq},     {"c1_sq", est.c1_sq},
              {"c0p_sq", opt(est.c0p_sq)},   {"c1p_sq", opt(est.c1p_sq)},
              {"c0pp_sq", opt(est.c0pp_sq)}, {"c1pp_sq", opt(est.c1pp_sq)}};
}

/// CSV rows (m, log_weight, weight_squared).
inline std::string type_distribution_csv(const typeclass::TypeDistribution& dist) {
  std::string out = "m,log_weight,weight_squared\n";
  for (std::size_t m = 0; m <= dist.repetitions(); ++m) {
    out += std::to_string(m);
    out += ',';
    out += float17(dist.log_weight(m));
    out += ',';
    out += float17(dist.weight_squared(m));
    out += '\n';
  }
  return out;
}

inline std::string spins_string(const device::ChainConfig& c) {
  std::string s;
  for (std::uint8_t up : c.spins) s += up ? 'u' : 'd';
  return s;
}

/// CSV of configs and coarse labels along a trajectory.
inline std::string trajectory_csv(const device::DeviceTrajectory& t) {
  std::string out = "step,atom,photon,spins,total_spin,label\n";
  for (std::size_t i = 0; i < t.configs.size(); ++i) {
    const auto& c = t.configs[i];
    out += std::to_string(i);
    out += ',';
    out += (c.atom == device::AtomLevel::Excited ? "excited" : "ground");
    out += ',';
    out += std::to_string(static_cast<int>(c.photon));
    out += ',';
    out += spins_string(c);
    out += ',';
    out += float17(device::total_spin(c));
    out += ',';
    out += std::to_string(device::coarse_grain(c));
    out += '\n';
  }
  return out;
}

}  // namespace serialize
}  // namespace bornsim

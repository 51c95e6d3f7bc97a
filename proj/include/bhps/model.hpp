#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include <json.hpp>

#include "bhps/core.hpp"

namespace bhps {

/// Periodic modulation of the tunneling element, delta(t) = delta0 + delta1 cos(omega t).
struct Drive {
  double delta0{1.0};
  double delta1{0.0};
  double omega{kTwoPi};

  double period() const { return kTwoPi / omega; }
};

/// Parameterization of a two- or three-mode Bose-Hubbard system.
///
/// For two modes `eps` is the onsite offset eps2 - eps1; it is split symmetrically,
/// eps1 = -eps/2 and eps2 = +eps/2. For three modes `onsite` holds (eps1, eps2, eps3)
/// and `delta`, `delta23` are the 1-2 and 2-3 tunneling elements.
struct ModelSpec {
  int modes{2};
  int particles{1};
  double delta{1.0};
  double delta23{1.0};
  double eps{0.0};
  std::array<double, 3> onsite{0.0, 0.0, 0.0};
  double u{0.0};
  double gamma1{0.0};
  std::optional<Drive> drive;

  void validate() const {
    require(modes == 2 || modes == 3, "ModelSpec: modes must be 2 or 3, got " + std::to_string(modes));
    require(particles >= 1, "ModelSpec: particles must be >= 1");
    auto finite = [](double x) { return std::isfinite(x); };
    require(finite(delta) && finite(delta23) && finite(eps) && finite(u) && finite(gamma1),
            "ModelSpec: parameters must be finite");
    for (double e : onsite) require(finite(e), "ModelSpec: onsite energies must be finite");
    require(gamma1 >= 0.0, "ModelSpec: gamma1 must be >= 0");
    if (drive) {
      require(modes == 2, "ModelSpec: drive is only supported for two modes");
      require(finite(drive->delta0) && finite(drive->delta1) && finite(drive->omega),
              "ModelSpec: drive parameters must be finite");
      require(drive->delta1 == 0.0 || drive->omega > 0.0, "ModelSpec: omega must be > 0 when delta1 != 0");
      require(drive->omega >= 0.0, "ModelSpec: omega must be >= 0");
    }
  }

  bool time_dependent() const { return drive.has_value() && drive->delta1 != 0.0; }

  /// Tunneling between modes 1 and 2 at time t.
  double tunneling(double t) const {
    if (drive) return drive->delta0 + drive->delta1 * std::cos(drive->omega * t);
    return delta;
  }

  /// Onsite energies (eps1, eps2, eps3); the third entry is zero for two modes.
  std::array<double, 3> onsite_energies() const {
    if (modes == 2) return {-0.5 * eps, 0.5 * eps, 0.0};
    return onsite;
  }

  /// U N, the macroscopic interaction for Q ordering.
  double un() const { return u * particles; }
};

inline void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = nlohmann::json{{"modes", s.modes}, {"particles", s.particles}, {"u", s.u}, {"gamma1", s.gamma1}};
  if (s.modes == 2) {
    j["delta"] = s.delta;
    j["eps"] = s.eps;
  } else {
    j["delta"] = {s.delta, s.delta23};
    j["eps"] = {s.onsite[0], s.onsite[1], s.onsite[2]};
  }
  if (s.drive) {
    j["delta0"] = s.drive->delta0;
    j["delta1"] = s.drive->delta1;
    j["omega"] = s.drive->omega;
  }
}

inline void from_json(const nlohmann::json& j, ModelSpec& s) {
  s = ModelSpec{};
  s.modes = j.value("modes", 2);
  s.particles = j.value("particles", 1);
  s.u = j.value("u", 0.0);
  s.gamma1 = j.value("gamma1", 0.0);
  if (j.contains("delta")) {
    const auto& d = j.at("delta");
    if (d.is_array()) {
      if (d.size() != 2) throw InvalidArgument("config: 'delta' array must hold [delta12, delta23]");
      s.delta = d[0].get<double>();
      s.delta23 = d[1].get<double>();
    } else {
      s.delta = d.get<double>();
      s.delta23 = s.delta;
    }
  }
  if (j.contains("eps")) {
    const auto& e = j.at("eps");
    if (e.is_array()) {
      if (e.size() != 3) throw InvalidArgument("config: 'eps' array must hold [eps1, eps2, eps3]");
      for (int k = 0; k < 3; ++k) s.onsite[k] = e[k].get<double>();
    } else {
      s.eps = e.get<double>();
    }
  }
  if (j.contains("delta0") || j.contains("delta1") || j.contains("omega")) {
    Drive d;
    d.delta0 = j.value("delta0", s.delta);
    d.delta1 = j.value("delta1", 0.0);
    d.omega = j.value("omega", kTwoPi);
    s.drive = d;
    s.delta = d.delta0;
  }
  s.validate();
}

}  // namespace bhps

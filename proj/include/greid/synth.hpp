#pragma once

#include "greid/feature_store.hpp"

namespace greid {

/// Synthetic group re-ID scenario: per identity, two camera views of a group
/// whose members share feature prototypes, with controllable member churn
/// between views, feature noise, and per-view distractor members.
struct SynthConfig {
  int n_identities = 0;
  int members_min = 2;
  int members_max = 4;
  int feature_dim = 32;
  double noise_sigma = 0.0;
  int churn_count = 0;       // members replaced between the two views
  int distractor_count = 0;  // extra non-member people per view
  std::uint64_t seed = 0;
};

namespace detail {

inline Vec noisy_feature(Rng& rng, const Vec& proto, double sigma) {
  if (sigma == 0.0) return proto;
  Vec v = proto + sigma * rng.gaussian_vec(static_cast<int>(proto.size()));
  const double n = v.norm();
  if (n < 1e-12) return proto;
  return v / n;
}

inline std::string zpad(int v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace detail

/// Deterministic for a fixed config: all randomness flows from one seeded
/// generator in a fixed draw order.
inline DatasetManifest generate(const SynthConfig& cfg, int part_count = 4) {
  if (cfg.n_identities < 1) throw ConfigError("synth: n_identities must be positive");
  if (cfg.members_min < 1 || cfg.members_max < cfg.members_min) {
    throw ConfigError("synth: invalid members range");
  }
  if (cfg.feature_dim < 1) throw ConfigError("synth: feature_dim must be positive");
  if (part_count < 1 || cfg.feature_dim % part_count != 0) {
    throw ConfigError("synth: part count must divide feature dimension");
  }
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) {
    throw ConfigError("synth: noise_sigma must be a finite non-negative value");
  }
  if (cfg.distractor_count < 0) throw ConfigError("synth: distractor_count must be >= 0");
  if (cfg.churn_count < 0) throw ConfigError("synth: churn_count must be >= 0");
  if (cfg.churn_count >= cfg.members_min) {
    throw DataError("synth: churn_count must be smaller than the group size");
  }

  Rng rng(cfg.seed);
  DatasetManifest m;
  m.feature_dim = cfg.feature_dim;
  m.part_count = part_count;

  for (int id = 0; id < cfg.n_identities; ++id) {
    const int members =
        cfg.members_min + static_cast<int>(rng.index(
                              static_cast<std::size_t>(cfg.members_max - cfg.members_min + 1)));
    std::vector<Vec> protos;
    protos.reserve(static_cast<std::size_t>(members));
    for (int k = 0; k < members; ++k) protos.push_back(rng.unit_vec(cfg.feature_dim));

    const std::string gid = "g" + detail::zpad(id, 5);
    GroupSample view_a{gid, "a", {}};
    GroupSample view_b{gid, "b", {}};

    // View A: every base prototype, then its distractors.
    for (int k = 0; k < members; ++k) {
      view_a.members.push_back(make_descriptor("p" + detail::zpad(k, 2),
                                               detail::noisy_feature(rng, protos[k], cfg.noise_sigma),
                                               part_count, rng.uniform(0.0, 10.0)));
    }
    for (int k = 0; k < cfg.distractor_count; ++k) {
      const Vec proto = rng.unit_vec(cfg.feature_dim);
      view_a.members.push_back(make_descriptor("za" + detail::zpad(k, 2),
                                               detail::noisy_feature(rng, proto, cfg.noise_sigma),
                                               part_count, rng.uniform(0.0, 10.0)));
    }

    // View B: the last churn_count members are replaced by new people.
    for (int k = 0; k < members; ++k) {
      const bool churned = k >= members - cfg.churn_count;
      const Vec proto = churned ? rng.unit_vec(cfg.feature_dim) : protos[static_cast<std::size_t>(k)];
      const std::string pid = (churned ? "q" : "p") + detail::zpad(k, 2);
      view_b.members.push_back(make_descriptor(pid,
                                               detail::noisy_feature(rng, proto, cfg.noise_sigma),
                                               part_count, rng.uniform(0.0, 10.0)));
    }
    for (int k = 0; k < cfg.distractor_count; ++k) {
      const Vec proto = rng.unit_vec(cfg.feature_dim);
      view_b.members.push_back(make_descriptor("zb" + detail::zpad(k, 2),
                                               detail::noisy_feature(rng, proto, cfg.noise_sigma),
                                               part_count, rng.uniform(0.0, 10.0)));
    }

    sort_members(view_a);
    sort_members(view_b);
    m.groups.push_back(std::move(view_a));
    m.groups.push_back(std::move(view_b));
  }
  return m;
}

}  // namespace greid

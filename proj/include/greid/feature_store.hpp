#pragma once

#include "greid/common.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace greid {

/// One person: identity, L2-normalized feature vector, its part split, and
/// the mean of the person's depth map (used only for ordering).
struct PersonDescriptor {
  std::string person_id;
  Vec feature;             // dimension D, unit L2 norm after ingest
  std::vector<Vec> parts;  // P slices of feature, each of dimension D/P
  double depth_mean = 0.0;
};

inline std::vector<Vec> split_parts(const Vec& feature, int part_count) {
  if (part_count <= 0) throw ConfigError("part count must be positive");
  if (feature.size() % part_count != 0) {
    throw DataError("part count " + std::to_string(part_count) +
                    " must divide feature dimension " + std::to_string(feature.size()));
  }
  const int part_dim = static_cast<int>(feature.size()) / part_count;
  std::vector<Vec> parts;
  parts.reserve(static_cast<std::size_t>(part_count));
  for (int p = 0; p < part_count; ++p) {
    parts.push_back(feature.segment(p * part_dim, part_dim));
  }
  return parts;
}

/// Normalizes the raw feature to unit L2 norm and splits it into parts.
inline PersonDescriptor make_descriptor(std::string person_id, const Vec& raw_feature,
                                        int part_count, double depth_mean) {
  if (!raw_feature.allFinite() || !std::isfinite(depth_mean)) {
    throw DataError("non-finite value in record for person '" + person_id + "'");
  }
  if (depth_mean < 0.0) {
    throw DataError("negative depth for person '" + person_id + "'");
  }
  const double norm = raw_feature.norm();
  if (norm < 1e-300) {
    throw DataError("zero-norm feature for person '" + person_id + "'");
  }
  PersonDescriptor d;
  d.person_id = std::move(person_id);
  d.feature = raw_feature / norm;
  d.parts = split_parts(d.feature, part_count);
  d.depth_mean = depth_mean;
  return d;
}

/// One group as seen by one camera. Members are kept sorted by ascending
/// depth (ties by person_id) so graph construction is canonical.
struct GroupSample {
  std::string group_id;
  std::string camera_id;
  std::vector<PersonDescriptor> members;
};

inline void sort_members(GroupSample& g) {
  std::sort(g.members.begin(), g.members.end(),
            [](const PersonDescriptor& a, const PersonDescriptor& b) {
              if (a.depth_mean != b.depth_mean) return a.depth_mean < b.depth_mean;
              return a.person_id < b.person_id;
            });
}

struct DatasetManifest {
  std::vector<GroupSample> groups;
  int feature_dim = 0;
  int part_count = 0;
};

struct Violation {
  std::string group_id;
  std::string person_id;
  std::string message;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Parses the line-delimited feature format:
///   group_id <TAB> camera_id <TAB> person_id <TAB> depth_mean <TAB> v1,v2,...,vD
/// Lines starting with '#' and blank lines are skipped. Records of the same
/// (group_id, camera_id) accumulate into one group, first-appearance order.
inline DatasetManifest load_dataset(std::istream& in, int part_count) {
  if (part_count <= 0) throw ConfigError("part count must be positive");
  DatasetManifest m;
  m.part_count = part_count;

  std::unordered_map<std::string, std::size_t> group_index;
  std::unordered_map<std::string, std::unordered_set<std::string>> seen_persons;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const auto fail = [&](const std::string& why) -> DataError {
      return DataError("line " + std::to_string(line_no) + ": " + why);
    };

    const auto fields = detail::split(line, '\t');
    if (fields.size() != 5) {
      throw fail("expected 5 tab-separated fields, got " + std::to_string(fields.size()));
    }
    const std::string gid(fields[0]);
    const std::string cam(fields[1]);
    const std::string pid(fields[2]);
    if (gid.empty() || cam.empty() || pid.empty()) throw fail("empty id field");

    double depth = 0.0;
    if (!parse_double(fields[3], depth)) throw fail("unparseable depth value");

    const auto value_fields = detail::split(fields[4], ',');
    Vec raw(static_cast<Eigen::Index>(value_fields.size()));
    for (std::size_t i = 0; i < value_fields.size(); ++i) {
      double v = 0.0;
      if (!parse_double(value_fields[i], v)) {
        throw fail("unparseable feature value at position " + std::to_string(i + 1));
      }
      raw(static_cast<Eigen::Index>(i)) = v;
    }

    if (m.feature_dim == 0) {
      m.feature_dim = static_cast<int>(raw.size());
      if (m.feature_dim % part_count != 0) {
        throw fail("part count " + std::to_string(part_count) +
                   " must divide feature dimension " + std::to_string(m.feature_dim));
      }
    } else if (static_cast<int>(raw.size()) != m.feature_dim) {
      throw fail("feature dimension " + std::to_string(raw.size()) +
                 " does not match dataset dimension " + std::to_string(m.feature_dim));
    }

    const std::string key = gid + '\t' + cam;
    auto [it, inserted] = group_index.try_emplace(key, m.groups.size());
    if (inserted) {
      m.groups.push_back(GroupSample{gid, cam, {}});
    }
    if (!seen_persons[key].insert(pid).second) {
      throw fail("duplicate person '" + pid + "' in group '" + gid + "'");
    }

    PersonDescriptor d;
    try {
      d = make_descriptor(pid, raw, part_count, depth);
    } catch (const DataError& e) {
      throw fail(e.what());
    }
    m.groups[it->second].members.push_back(std::move(d));
  }
  if (m.groups.empty()) throw DataError("dataset contains no records");

  for (auto& g : m.groups) sort_members(g);
  return m;
}

inline DatasetManifest load_dataset(const std::string& path, int part_count) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset file not found: " + path);
  return load_dataset(in, part_count);
}

/// Checks every manifest invariant; returns one entry per violation. Unlike
/// load_dataset this never throws: violations are data, not errors.
inline std::vector<Violation> validate_dataset(const DatasetManifest& m) {
  std::vector<Violation> out;
  const auto add = [&](std::string gid, std::string pid, std::string msg) {
    out.push_back(Violation{std::move(gid), std::move(pid), std::move(msg)});
  };

  if (m.feature_dim <= 0) add("", "", "feature dimension must be positive");
  if (m.part_count <= 0) add("", "", "part count must be positive");
  if (m.feature_dim > 0 && m.part_count > 0 && m.feature_dim % m.part_count != 0) {
    add("", "", "part count must divide feature dimension");
  }

  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& g : m.groups) {
    if (!keys.insert({g.group_id, g.camera_id}).second) {
      add(g.group_id, "", "duplicate group_id/camera_id pair (camera '" + g.camera_id + "')");
    }
    if (g.members.empty()) {
      add(g.group_id, "", "group has no members");
      continue;
    }
    std::unordered_set<std::string> pids;
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      const auto& p = g.members[i];
      if (!pids.insert(p.person_id).second) {
        add(g.group_id, p.person_id, "duplicate person within group");
      }
      if (!p.feature.allFinite()) {
        add(g.group_id, p.person_id, "non-finite feature value");
      } else {
        if (static_cast<int>(p.feature.size()) != m.feature_dim) {
          add(g.group_id, p.person_id, "feature dimension does not match dataset dimension");
        }
        if (std::abs(p.feature.norm() - 1.0) > 1e-9) {
          add(g.group_id, p.person_id, "feature is not L2-normalized");
        }
      }
      if (!std::isfinite(p.depth_mean)) {
        add(g.group_id, p.person_id, "non-finite depth value");
      } else if (p.depth_mean < 0.0) {
        add(g.group_id, p.person_id, "negative depth value");
      }
      if (static_cast<int>(p.parts.size()) != m.part_count) {
        add(g.group_id, p.person_id, "wrong number of parts");
      } else if (m.part_count > 0 && m.feature_dim % m.part_count == 0) {
        const int part_dim = m.feature_dim / m.part_count;
        bool parts_ok = static_cast<int>(p.feature.size()) == m.feature_dim;
        for (const auto& part : p.parts) {
          if (static_cast<int>(part.size()) != part_dim) parts_ok = false;
        }
        if (parts_ok) {
          for (int q = 0; q < m.part_count && parts_ok; ++q) {
            for (int k = 0; k < part_dim && parts_ok; ++k) {
              if (p.parts[static_cast<std::size_t>(q)](k) != p.feature(q * part_dim + k)) {
                parts_ok = false;
              }
            }
          }
        }
        if (!parts_ok) add(g.group_id, p.person_id, "parts do not reconstruct feature");
      }
      if (i > 0) {
        const auto& prev = g.members[i - 1];
        const bool ordered = prev.depth_mean < p.depth_mean ||
                             (prev.depth_mean == p.depth_mean && prev.person_id < p.person_id);
        if (!ordered) {
          add(g.group_id, p.person_id, "members not sorted by depth (tie-break person_id)");
        }
      }
    }
  }
  return out;
}

/// Writes the same line format load_dataset reads. Doubles use %.17g, so a
/// save/load round trip reproduces every value.
inline void save_dataset(const DatasetManifest& m, std::ostream& out) {
  for (const auto& g : m.groups) {
    for (const auto& p : g.members) {
      out << g.group_id << '\t' << g.camera_id << '\t' << p.person_id << '\t'
          << fmt_double(p.depth_mean) << '\t';
      for (Eigen::Index i = 0; i < p.feature.size(); ++i) {
        if (i > 0) out << ',';
        out << fmt_double(p.feature(i));
      }
      out << '\n';
    }
  }
}

inline void save_dataset(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: keep LF endings everywhere
  if (!out) throw DataError("cannot open output file: " + path);
  save_dataset(m, out);
  if (!out) throw DataError("failed writing dataset file: " + path);
}

}  // namespace greid

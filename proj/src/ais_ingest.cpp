#include "trajgan/ais_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace trajgan {

namespace {

// Splits one CSV line honoring double-quoted fields with "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

// days since 1970-01-01 for a proleptic Gregorian date
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = unsigned(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + std::int64_t(doe) - 719468;
}

int find_column(const std::vector<std::string>& header,
                const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) == name) return int(i);
  return -1;
}

std::string field_at(const std::vector<std::string>& fields, int idx) {
  if (idx < 0 || std::size_t(idx) >= fields.size()) return {};
  return trim(fields[std::size_t(idx)]);
}

}  // namespace

double parse_timestamp(const std::string& text) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::string t = trim(text);
  if (t.empty()) return nan;

  // pure number: epoch seconds
  {
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() + t.size()) return std::isfinite(v) ? v : nan;
  }

  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  char sep = 0;
  const int got = std::sscanf(t.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d,
                              &sep, &h, &mi, &sec);
  if (got < 7 || (sep != 'T' && sep != ' ')) return nan;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || sec < 0.0 || sec >= 61.0)
    return nan;
  return double(days_from_civil(y, unsigned(mo), unsigned(d))) * 86400.0 +
         double(h) * 3600.0 + double(mi) * 60.0 + sec;
}

ParseResult parse_ais_csv(std::istream& input, const ColumnMap& columns) {
  std::string line;
  if (!std::getline(input, line))
    throw IngestError("parse_ais_csv: empty input, no header row");
  const auto header = split_csv(line);

  const int c_mmsi = find_column(header, columns.mmsi);
  const int c_ts = find_column(header, columns.timestamp);
  const int c_lat = find_column(header, columns.lat);
  const int c_lon = find_column(header, columns.lon);
  if (c_mmsi < 0 || c_ts < 0 || c_lat < 0 || c_lon < 0) {
    std::string missing;
    if (c_mmsi < 0) missing += " " + columns.mmsi;
    if (c_ts < 0) missing += " " + columns.timestamp;
    if (c_lat < 0) missing += " " + columns.lat;
    if (c_lon < 0) missing += " " + columns.lon;
    throw IngestError("parse_ais_csv: missing mandatory column(s):" + missing);
  }
  const int c_sog = find_column(header, columns.sog);
  const int c_cog = find_column(header, columns.cog);
  const int c_head = find_column(header, columns.heading);
  const int c_len = find_column(header, columns.length);
  const int c_wid = find_column(header, columns.width);
  const int c_dr = find_column(header, columns.draught);

  ParseResult result;
  std::size_t row = 0;
  while (std::getline(input, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    auto reject = [&](const std::string& reason) {
      result.rejections.push_back({row, reason});
    };

    AisRecord rec;

    const std::string mmsi_s = field_at(fields, c_mmsi);
    bool ok = !mmsi_s.empty() && mmsi_s.size() == 9 &&
              std::all_of(mmsi_s.begin(), mmsi_s.end(), [](char c) {
                return std::isdigit(static_cast<unsigned char>(c));
              });
    if (!ok) {
      reject("mmsi not a 9-digit identifier");
      continue;
    }
    rec.mmsi = std::stoll(mmsi_s);

    rec.timestamp = parse_timestamp(field_at(fields, c_ts));
    if (std::isnan(rec.timestamp) || rec.timestamp <= 0.0) {
      reject("bad timestamp");
      continue;
    }
    if (!parse_double(field_at(fields, c_lat), rec.lat) || rec.lat < -90.0 ||
        rec.lat > 90.0) {
      reject("lat out of range");
      continue;
    }
    if (!parse_double(field_at(fields, c_lon), rec.lon) || rec.lon < -180.0 ||
        rec.lon > 180.0) {
      reject("lon out of range");
      continue;
    }

    // sog and cog: present but out-of-range values reject the row, absent
    // values stay missing
    const std::string sog_s = field_at(fields, c_sog);
    if (!sog_s.empty()) {
      if (!parse_double(sog_s, rec.sog) || rec.sog < 0.0) {
        reject("sog out of range");
        continue;
      }
    }
    const std::string cog_s = field_at(fields, c_cog);
    if (!cog_s.empty()) {
      if (!parse_double(cog_s, rec.cog) || rec.cog < 0.0 || rec.cog >= 360.0) {
        reject("cog out of range");
        continue;
      }
    }

    // static-attribute fields use sentinel junk in real NOAA exports;
    // invalid values degrade to missing instead of rejecting the row
    double v = 0.0;
    const std::string head_s = field_at(fields, c_head);
    if (parse_double(head_s, v) && v >= 0.0 && v < 360.0) rec.heading = v;
    const std::string len_s = field_at(fields, c_len);
    if (parse_double(len_s, v) && v > 0.0) rec.length = v;
    const std::string wid_s = field_at(fields, c_wid);
    if (parse_double(wid_s, v) && v > 0.0) rec.width = v;
    const std::string dr_s = field_at(fields, c_dr);
    if (parse_double(dr_s, v) && v >= 0.0) rec.draught = v;

    result.records.push_back(rec);
  }
  return result;
}

ParseResult parse_ais_csv_file(const std::string& path,
                               const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw IngestError("parse_ais_csv: cannot open " + path);
  return parse_ais_csv(in, columns);
}

std::string render_rejections(const std::vector<Rejection>& rejections) {
  std::ostringstream os;
  for (const auto& r : rejections) os << r.row << '\t' << r.reason << '\n';
  return os.str();
}

int AisSequence::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i)
    if (feature_names[i] == name) return int(i);
  return -1;
}

namespace {

double record_feature(const AisRecord& r, const std::string& name) {
  if (name == "sog") return r.sog;
  if (name == "cog") return r.cog;
  if (name == "heading") return r.heading;
  if (name == "lat") return r.lat;
  if (name == "lon") return r.lon;
  if (name == "length") return r.length;
  if (name == "width") return r.width;
  if (name == "draught") return r.draught;
  throw IngestError("build_sequences: unknown feature '" + name + "'");
}

// Value fields break timestamp ties so ordering does not depend on the
// input row order.
bool record_less(const AisRecord& a, const AisRecord& b) {
  const auto key = [](const AisRecord& r) {
    return std::make_tuple(r.timestamp, r.lat, r.lon, r.sog, r.cog, r.heading,
                           r.length, r.width, r.draught);
  };
  // NaNs compare equal to themselves via bit pattern ordering; map them to
  // a fixed large value to keep the comparator a strict weak order
  const auto clean = [](std::tuple<double, double, double, double, double,
                                   double, double, double, double> t) {
    auto fix = [](double& x) {
      if (std::isnan(x)) x = 1e308;
    };
    std::apply([&](auto&... v) { (fix(v), ...); }, t);
    return t;
  };
  return clean(key(a)) < clean(key(b));
}

}  // namespace

std::vector<AisSequence> build_sequences(
    const std::vector<AisRecord>& records, std::size_t T, std::size_t stride,
    const std::vector<std::string>& features, double max_gap_seconds) {
  if (T < 2)
    throw IngestError("build_sequences: window length must be >= 2, got " +
                      std::to_string(T));
  if (stride < 1) throw IngestError("build_sequences: stride must be >= 1");
  for (const auto& f : features) (void)record_feature(AisRecord{}, f);
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t j = i + 1; j < features.size(); ++j)
      if (features[i] == features[j])
        throw IngestError("build_sequences: duplicate feature '" +
                          features[i] + "'");

  std::map<std::int64_t, std::vector<AisRecord>> by_vessel;
  for (const auto& r : records) by_vessel[r.mmsi].push_back(r);

  std::vector<AisSequence> out;
  const std::size_t d = features.size();
  for (auto& [mmsi, recs] : by_vessel) {
    std::sort(recs.begin(), recs.end(), record_less);
    // drop duplicate timestamps, keeping the first in sorted order
    std::vector<AisRecord> track;
    for (const auto& r : recs)
      if (track.empty() || r.timestamp != track.back().timestamp)
        track.push_back(r);

    // split into segments at gaps wider than the cutoff
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    std::size_t seg_start = 0;
    for (std::size_t i = 1; i <= track.size(); ++i) {
      if (i == track.size() ||
          track[i].timestamp - track[i - 1].timestamp > max_gap_seconds) {
        segments.emplace_back(seg_start, i);
        seg_start = i;
      }
    }

    for (const auto& [lo, hi] : segments) {
      const std::size_t len = hi - lo;
      if (len < T) continue;
      for (std::size_t w = 0; w + T <= len; w += stride) {
        AisSequence seq;
        seq.mmsi = mmsi;
        seq.feature_names = features;
        seq.start_time = track[lo + w].timestamp;
        seq.values.assign(T * d, 0.0);
        seq.mask.assign(T * d, 0);
        seq.rel_time.resize(T);
        for (std::size_t t = 0; t < T; ++t) {
          const AisRecord& r = track[lo + w + t];
          seq.rel_time[t] = r.timestamp - seq.start_time;
          for (std::size_t f = 0; f < d; ++f) {
            const double v = record_feature(r, features[f]);
            if (std::isnan(v)) {
              seq.values[t * d + f] = std::numeric_limits<double>::quiet_NaN();
            } else {
              seq.values[t * d + f] = v;
              seq.mask[t * d + f] = 1;
            }
          }
        }
        out.push_back(std::move(seq));
      }
    }
  }
  return out;
}

DomainRule lon_split_rule(double meridian) {
  DomainRule rule;
  rule.description = "lon_split:" + std::to_string(meridian);
  rule.is_source = [meridian](const AisSequence& s) {
    const int lon = s.feature_index("lon");
    return lon >= 0 && s.at(0, std::size_t(lon)) < meridian;
  };
  rule.is_target = [meridian](const AisSequence& s) {
    const int lon = s.feature_index("lon");
    return lon >= 0 && s.at(0, std::size_t(lon)) >= meridian;
  };
  return rule;
}

DomainRule bbox_rule(const BoundingBox& source_box,
                     const BoundingBox& target_box) {
  DomainRule rule;
  rule.description = "bbox";
  auto in_box = [](const AisSequence& s, const BoundingBox& box) {
    const int lat = s.feature_index("lat");
    const int lon = s.feature_index("lon");
    return lat >= 0 && lon >= 0 &&
           box.contains(s.at(0, std::size_t(lat)), s.at(0, std::size_t(lon)));
  };
  rule.is_source = [source_box, in_box](const AisSequence& s) {
    return in_box(s, source_box);
  };
  rule.is_target = [target_box, in_box](const AisSequence& s) {
    return in_box(s, target_box);
  };
  return rule;
}

DomainRule all_source_rule() {
  DomainRule rule;
  rule.description = "all_source";
  rule.is_source = [](const AisSequence&) { return true; };
  rule.is_target = [](const AisSequence&) { return false; };
  return rule;
}

DomainSplit partition_domains(const std::vector<AisSequence>& sequences,
                              const DomainRule& rule) {
  DomainSplit split;
  split.rule = rule.description;
  for (const auto& seq : sequences) {
    const bool src = rule.is_source(seq);
    const bool tgt = rule.is_target(seq);
    if (src && tgt)
      throw IngestError(
          "partition_domains: rule assigns a sequence to both domains (mmsi " +
          std::to_string(seq.mmsi) + ")");
    if (src)
      split.source.push_back(seq);
    else if (tgt)
      split.target.push_back(seq);
    else
      ++split.discarded;
  }
  return split;
}

ExportResult export_geojson(const std::vector<AisSequence>& sequences,
                            const std::string& path) {
  using nlohmann::json;
  ExportResult result;
  json features = json::array();
  for (const auto& seq : sequences) {
    const int lat = seq.feature_index("lat");
    const int lon = seq.feature_index("lon");
    if (lat < 0 || lon < 0) {
      ++result.skipped;
      result.warnings.push_back("sequence mmsi " + std::to_string(seq.mmsi) +
                                " lacks lat/lon features, skipped");
      continue;
    }
    json coords = json::array();
    for (std::size_t t = 0; t < seq.steps(); ++t)
      coords.push_back({seq.at(t, std::size_t(lon)), seq.at(t, std::size_t(lat))});
    json feature = {
        {"type", "Feature"},
        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
        {"properties",
         {{"mmsi", seq.mmsi}, {"start_time", seq.start_time}}},
    };
    features.push_back(std::move(feature));
    ++result.written;
  }
  const json collection = {{"type", "FeatureCollection"},
                           {"features", features}};
  std::ofstream out(path);
  if (!out) throw IngestError("export_geojson: cannot write " + path);
  out << collection.dump(2) << '\n';
  return result;
}

}  // namespace trajgan

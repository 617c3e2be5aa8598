#pragma once
// AIS CSV ingestion: record parsing with per-row rejection logging,
// per-vessel windowing into fixed-length sequences, source/target domain
// partitioning, and GeoJSON export of trajectories.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajgan/preprocess.hpp"

namespace trajgan {

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AisRecord {
  std::int64_t mmsi = 0;
  double timestamp = 0.0;  // UTC epoch seconds
  double lat = 0.0;
  double lon = 0.0;
  // optional fields use NaN when missing
  double sog = std::numeric_limits<double>::quiet_NaN();
  double cog = std::numeric_limits<double>::quiet_NaN();
  double heading = std::numeric_limits<double>::quiet_NaN();
  double length = std::numeric_limits<double>::quiet_NaN();
  double width = std::numeric_limits<double>::quiet_NaN();
  double draught = std::numeric_limits<double>::quiet_NaN();
};

struct Rejection {
  std::size_t row = 0;  // 1-based data row number (header excluded)
  std::string reason;
};

struct ParseResult {
  std::vector<AisRecord> records;
  std::vector<Rejection> rejections;
};

// Maps logical fields to CSV header names; defaults follow the NOAA
// MarineCadastre schema.
struct ColumnMap {
  std::string mmsi = "MMSI";
  std::string timestamp = "BaseDateTime";
  std::string lat = "LAT";
  std::string lon = "LON";
  std::string sog = "SOG";
  std::string cog = "COG";
  std::string heading = "Heading";
  std::string length = "Length";
  std::string width = "Width";
  std::string draught = "Draft";
};

ParseResult parse_ais_csv(std::istream& input, const ColumnMap& columns = {});
ParseResult parse_ais_csv_file(const std::string& path,
                               const ColumnMap& columns = {});

// One line per rejection: <row>\t<reason>
std::string render_rejections(const std::vector<Rejection>& rejections);

struct AisSequence {
  std::int64_t mmsi = 0;
  double start_time = 0.0;
  std::vector<std::string> feature_names;  // d names, unique
  std::vector<double> values;              // T x d row-major
  std::vector<char> mask;                  // T x d, 1 = originally observed
  std::vector<double> rel_time;            // seconds since start_time, length T
  std::shared_ptr<const MinMaxScaler> scaler;  // set once normalized

  std::size_t steps() const { return rel_time.size(); }
  std::size_t dims() const { return feature_names.size(); }
  double at(std::size_t t, std::size_t f) const { return values[t * dims() + f]; }
  double& at(std::size_t t, std::size_t f) { return values[t * dims() + f]; }
  bool observed(std::size_t t, std::size_t f) const {
    return mask[t * dims() + f] != 0;
  }
  // index of a named feature, or -1
  int feature_index(const std::string& name) const;
};

inline constexpr double kDefaultMaxGapSeconds = 3600.0;

// Groups records by vessel, orders them chronologically (value fields break
// timestamp ties so the result is independent of input order), drops exact
// duplicate timestamps, splits tracks at gaps wider than max_gap_seconds,
// and tiles each segment into windows of exactly T steps advancing by
// stride. Windows shorter than T are discarded.
std::vector<AisSequence> build_sequences(
    const std::vector<AisRecord>& records, std::size_t T, std::size_t stride,
    const std::vector<std::string>& features,
    double max_gap_seconds = kDefaultMaxGapSeconds);

struct DomainRule {
  std::string description;
  std::function<bool(const AisSequence&)> is_source;
  std::function<bool(const AisSequence&)> is_target;
};

// Sequences west of the meridian are source, east are target (classified
// by the first step's longitude).
DomainRule lon_split_rule(double meridian);
struct BoundingBox {
  double lat_min, lat_max, lon_min, lon_max;
  bool contains(double lat, double lon) const {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
  }
};
DomainRule bbox_rule(const BoundingBox& source_box,
                     const BoundingBox& target_box);
DomainRule all_source_rule();

struct DomainSplit {
  std::vector<AisSequence> source;
  std::vector<AisSequence> target;
  std::size_t discarded = 0;
  std::string rule;
};

DomainSplit partition_domains(const std::vector<AisSequence>& sequences,
                              const DomainRule& rule);

struct ExportResult {
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// One LineString per sequence with [lon, lat] coordinate order; sequences
// without lat/lon features are skipped with a warning.
ExportResult export_geojson(const std::vector<AisSequence>& sequences,
                            const std::string& path);

// "YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]" or plain epoch seconds.
// Returns NaN when unparseable.
double parse_timestamp(const std::string& text);

}  // namespace trajgan

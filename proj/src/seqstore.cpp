#include "trajgan/seqstore.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace trajgan {

namespace {

using json = nlohmann::json;

constexpr char kMagic[4] = {'T', 'G', 'S', 'Q'};
constexpr std::uint32_t kVersion = 1;

void append_f32(std::string& out, const std::vector<double>& v) {
  for (double x : v) {
    const float f = float(x);
    out.append(reinterpret_cast<const char*>(&f), sizeof(f));
  }
}

void append_f64(std::string& out, const std::vector<double>& v) {
  out.append(reinterpret_cast<const char*>(v.data()),
             v.size() * sizeof(double));
}

void append_mask(std::string& out, const std::vector<char>& mask) {
  std::string bytes((mask.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) bytes[i / 8] = char(bytes[i / 8] | (1 << (i % 8)));
  out += bytes;
}

}  // namespace

void save_sequences(const std::vector<AisSequence>& seqs,
                    const std::string& path) {
  json header;
  header["format_version"] = kVersion;
  header["count"] = seqs.size();
  if (!seqs.empty()) {
    header["steps"] = seqs[0].steps();
    header["dims"] = seqs[0].dims();
    header["feature_names"] = seqs[0].feature_names;
  } else {
    header["steps"] = 0;
    header["dims"] = 0;
    header["feature_names"] = json::array();
  }
  json mmsi = json::array(), start = json::array();
  std::string payload;
  for (const AisSequence& s : seqs) {
    if (s.steps() != seqs[0].steps() || s.dims() != seqs[0].dims() ||
        s.feature_names != seqs[0].feature_names)
      throw StoreError("sequences disagree on shape or feature names");
    if (s.values.size() != s.steps() * s.dims() ||
        s.mask.size() != s.values.size())
      throw StoreError("sequence " + std::to_string(s.mmsi) +
                       " has inconsistent buffer sizes");
    mmsi.push_back(s.mmsi);
    start.push_back(s.start_time);
    append_f32(payload, s.values);
    append_f64(payload, s.rel_time);
    append_mask(payload, s.mask);
  }
  header["mmsi"] = std::move(mmsi);
  header["start_time"] = std::move(start);

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StoreError("cannot write sequence store: " + path);
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  const std::uint64_t hlen = head.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(head.data(), std::streamsize(head.size()));
  out.write(payload.data(), std::streamsize(payload.size()));
  if (!out) throw StoreError("write failed: " + path);
}

std::vector<AisSequence> load_sequences(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open sequence store: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string file = ss.str();

  if (file.size() < 16 || std::memcmp(file.data(), kMagic, 4) != 0)
    throw StoreError("not a sequence store (bad magic): " + path);
  std::uint32_t ver;
  std::memcpy(&ver, file.data() + 4, sizeof(ver));
  if (ver != kVersion)
    throw StoreError("sequence store is format version " +
                     std::to_string(ver) + "; this build reads version " +
                     std::to_string(kVersion));
  std::uint64_t hlen;
  std::memcpy(&hlen, file.data() + 8, sizeof(hlen));
  if (16 + hlen > file.size())
    throw StoreError("truncated sequence store: header claims " +
                     std::to_string(hlen) + " bytes, file has " +
                     std::to_string(file.size() - 16) + " after headers");

  json header;
  try {
    header = json::parse(file.substr(16, hlen));
  } catch (const json::exception& e) {
    throw StoreError(std::string("corrupt sequence store header: ") +
                     e.what());
  }

  const std::size_t count = header.at("count").get<std::size_t>();
  const std::size_t steps = header.at("steps").get<std::size_t>();
  const std::size_t dims = header.at("dims").get<std::size_t>();
  std::vector<std::string> names =
      header.at("feature_names").get<std::vector<std::string>>();
  const auto& mmsi = header.at("mmsi");
  const auto& start = header.at("start_time");
  if (mmsi.size() != count || start.size() != count)
    throw StoreError("sequence store header lists " + std::to_string(count) +
                     " sequences but has " + std::to_string(mmsi.size()) +
                     " metadata rows");

  const std::size_t cell = steps * dims;
  const std::size_t record =
      cell * sizeof(float) + steps * sizeof(double) + (cell + 7) / 8;
  const std::size_t want = 16 + hlen + count * record;
  if (file.size() < want)
    throw StoreError("truncated sequence store: need " +
                     std::to_string(want) + " bytes, file has " +
                     std::to_string(file.size()));
  if (file.size() > want)
    throw StoreError("sequence store has " +
                     std::to_string(file.size() - want) +
                     " unread trailing bytes");

  std::vector<AisSequence> out(count);
  const char* p = file.data() + 16 + hlen;
  for (std::size_t i = 0; i < count; ++i) {
    AisSequence& s = out[i];
    s.mmsi = mmsi[i].get<std::int64_t>();
    s.start_time = start[i].get<double>();
    s.feature_names = names;
    s.values.resize(cell);
    for (std::size_t j = 0; j < cell; ++j) {
      float f;
      std::memcpy(&f, p, sizeof(f));
      p += sizeof(f);
      s.values[j] = double(f);
    }
    s.rel_time.resize(steps);
    std::memcpy(s.rel_time.data(), p, steps * sizeof(double));
    p += steps * sizeof(double);
    s.mask.assign(cell, 0);
    for (std::size_t j = 0; j < cell; ++j)
      s.mask[j] = char((p[j / 8] >> (j % 8)) & 1);
    p += (cell + 7) / 8;
  }
  return out;
}

}  // namespace trajgan

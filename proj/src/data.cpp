#include "demandcast/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace demandcast {

namespace {

struct LineReader {
  LineReader(std::istream& stream, std::string_view name) : in(stream), source(name) {}

  std::istream& in;
  std::string_view source;
  std::size_t line_no = 0;
  std::string line;

  bool next() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + msg);
  }

  void expect_header(std::string_view header) {
    if (!next()) fail("empty file, expected header '" + std::string(header) + "'");
    // Tolerate a UTF-8 byte-order mark.
    std::string_view h = line;
    if (h.starts_with("\xEF\xBB\xBF")) h.remove_prefix(3);
    if (h != header) fail("expected header '" + std::string(header) + "', got '" + std::string(h) + "'");
  }

  std::vector<std::string_view> fields(std::size_t expected) const {
    std::vector<std::string_view> out;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      out.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (out.size() != expected) {
      fail("expected " + std::to_string(expected) + " fields, got " + std::to_string(out.size()));
    }
    return out;
  }

  double number(std::string_view s, const char* what) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      fail(std::string("malformed ") + what + " '" + std::string(s) + "'");
    }
    if (!std::isfinite(v)) fail(std::string("non-finite ") + what);
    return v;
  }

  TimeStamp timestamp(std::string_view s) const {
    try {
      return TimeStamp::parse(s);
    } catch (const DataError& e) {
      fail(e.what());
    }
  }
};

struct Origin {
  std::uint32_t source = 0;
  std::size_t line = 0;
};

void parse_meter_into(std::istream& in, std::string_view source, std::uint32_t source_index,
                      std::vector<MeterReading>& out, std::vector<Origin>& origins) {
  LineReader r{in, source};
  r.expect_header("consumer_id,timestamp,kwh");
  while (r.next()) {
    if (r.line.empty()) continue;
    const auto f = r.fields(3);
    if (f[0].empty()) r.fail("empty consumer_id");
    const TimeStamp ts = r.timestamp(f[1]);
    if (!ts.on_half_hour_grid()) r.fail("timestamp " + ts.str() + " is not on a :00/:30 boundary");
    const double kwh = r.number(f[2], "kwh");
    if (kwh < 0.0) r.fail("negative energy " + std::string(f[2]));
    out.push_back({std::string(f[0]), ts, kwh});
    origins.push_back({source_index, r.line_no});
  }
}

void check_duplicates(const std::vector<MeterReading>& readings, const std::vector<Origin>& origins,
                      const std::vector<std::string>& sources) {
  std::vector<std::size_t> idx(readings.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = readings[a];
    const auto& rb = readings[b];
    if (ra.consumer_id != rb.consumer_id) return ra.consumer_id < rb.consumer_id;
    if (ra.timestamp != rb.timestamp) return ra.timestamp < rb.timestamp;
    return a < b;
  });
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const auto& a = readings[idx[k - 1]];
    const auto& b = readings[idx[k]];
    if (a.consumer_id == b.consumer_id && a.timestamp == b.timestamp) {
      const auto& oa = origins[idx[k - 1]];
      const auto& ob = origins[idx[k]];
      throw DataError("duplicate reading for consumer '" + a.consumer_id + "' at " + a.timestamp.str() + ": " +
                      sources[oa.source] + ":" + std::to_string(oa.line) + " and " + sources[ob.source] + ":" +
                      std::to_string(ob.line));
    }
  }
}

}  // namespace

std::vector<MeterReading> parse_meter_csv(std::istream& in, std::string_view source) {
  std::vector<MeterReading> out;
  std::vector<Origin> origins;
  parse_meter_into(in, source, 0, out, origins);
  check_duplicates(out, origins, {std::string(source)});
  return out;
}

std::vector<MeterReading> parse_meter_files(std::span<const std::filesystem::path> paths) {
  std::vector<MeterReading> out;
  std::vector<Origin> origins;
  std::vector<std::string> sources;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    sources.push_back(path.string());
    parse_meter_into(in, sources.back(), static_cast<std::uint32_t>(sources.size() - 1), out, origins);
  }
  check_duplicates(out, origins, sources);
  return out;
}

void write_meter_csv(std::ostream& out, std::span<const MeterReading> readings) {
  out << "consumer_id,timestamp,kwh\n";
  char buf[32];
  for (const auto& r : readings) {
    std::snprintf(buf, sizeof buf, "%.4f", r.kwh);
    out << r.consumer_id << ',' << r.timestamp.str() << ',' << buf << '\n';
  }
}

bool ConsumptionMatrix::uniform_grid() const {
  for (std::size_t t = 1; t < time_index.size(); ++t) {
    if (time_index[t].minutes() - time_index[t - 1].minutes() != TimeStamp::kIntervalMinutes) return false;
  }
  return true;
}

ConsumptionMatrix build_matrix(std::span<const MeterReading> readings) {
  if (readings.empty()) throw DataError("build_matrix: no readings");

  std::unordered_map<std::string_view, Eigen::Index> column;
  for (const auto& r : readings) column.emplace(r.consumer_id, 0);
  std::vector<std::string> ids;
  ids.reserve(column.size());
  for (const auto& [id, _] : column) ids.emplace_back(id);
  std::sort(ids.begin(), ids.end());
  column.clear();
  for (std::size_t c = 0; c < ids.size(); ++c) column.emplace(ids[c], static_cast<Eigen::Index>(c));

  std::vector<TimeStamp> times;
  times.reserve(readings.size() / std::max<std::size_t>(ids.size(), 1) + 1);
  for (const auto& r : readings) times.push_back(r.timestamp);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  ConsumptionMatrix m;
  const auto rows = static_cast<Eigen::Index>(times.size());
  const auto cols = static_cast<Eigen::Index>(ids.size());
  m.values = MatrixXd::Zero(rows, cols);
  m.present.setConstant(rows, cols, false);
  for (const auto& r : readings) {
    const auto row = static_cast<Eigen::Index>(std::lower_bound(times.begin(), times.end(), r.timestamp) -
                                               times.begin());
    const Eigen::Index col = column.at(r.consumer_id);
    m.values(row, col) = r.kwh;
    m.present(row, col) = true;
  }
  m.time_index = std::move(times);
  m.consumer_ids = std::move(ids);
  return m;
}

DropResult drop_incomplete(const ConsumptionMatrix& m) {
  std::vector<Eigen::Index> keep;
  DropResult out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (m.present.row(r).all()) {
      keep.push_back(r);
    } else {
      out.removed.push_back(m.time_index[static_cast<std::size_t>(r)]);
    }
  }
  if (keep.empty()) throw DataError("drop_incomplete: every time instance has a missing reading");

  auto& c = out.matrix;
  c.values.resize(static_cast<Eigen::Index>(keep.size()), m.cols());
  c.present.setConstant(static_cast<Eigen::Index>(keep.size()), m.cols(), true);
  c.time_index.reserve(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    c.values.row(static_cast<Eigen::Index>(k)) = m.values.row(keep[k]);
    c.time_index.push_back(m.time_index[static_cast<std::size_t>(keep[k])]);
  }
  c.consumer_ids = m.consumer_ids;
  return out;
}

ClusterAssignment parse_cluster_csv(std::istream& in, std::string_view source) {
  LineReader r{in, source};
  r.expect_header("consumer_id,cluster_id");
  ClusterAssignment out;
  while (r.next()) {
    if (r.line.empty()) continue;
    const auto f = r.fields(2);
    int cluster = 0;
    const auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), cluster);
    if (ec != std::errc{} || ptr != f[1].data() + f[1].size() || f[1].empty()) {
      r.fail("malformed cluster_id '" + std::string(f[1]) + "'");
    }
    if (f[0].empty()) r.fail("empty consumer_id");
    if (!out.emplace(std::string(f[0]), cluster).second) {
      r.fail("consumer '" + std::string(f[0]) + "' assigned more than once");
    }
  }
  return out;
}

void write_cluster_csv(std::ostream& out, const ClusterAssignment& assignment) {
  out << "consumer_id,cluster_id\n";
  for (const auto& [id, cluster] : assignment) out << id << ',' << cluster << '\n';
}

std::vector<ClusterProfile> cluster_profile(const ConsumptionMatrix& m, const ClusterAssignment& assignment) {
  if (!m.complete()) throw DataError("cluster_profile: matrix has absent cells; run drop_incomplete first");

  std::map<int, std::vector<Eigen::Index>> columns;
  for (const auto& [id, cluster] : assignment) columns[cluster];
  for (std::size_t c = 0; c < m.consumer_ids.size(); ++c) {
    const auto it = assignment.find(m.consumer_ids[c]);
    if (it == assignment.end()) {
      throw DataError("cluster_profile: consumer '" + m.consumer_ids[c] + "' has no cluster assignment");
    }
    columns[it->second].push_back(static_cast<Eigen::Index>(c));
  }

  std::vector<ClusterProfile> out;
  for (const auto& [cluster, cols] : columns) {
    if (cols.empty()) {
      throw DataError("cluster_profile: cluster " + std::to_string(cluster) + " has no consumers in the matrix");
    }
    ClusterProfile p;
    p.cluster_id = cluster;
    VectorXd sum = VectorXd::Zero(m.rows());
    for (Eigen::Index c : cols) {
      sum += m.values.col(c);
      p.members.push_back(m.consumer_ids[static_cast<std::size_t>(c)]);
    }
    sum /= static_cast<double>(cols.size());
    p.profile.assign(sum.data(), sum.data() + sum.size());
    out.push_back(std::move(p));
  }
  return out;
}

void SplitSpec::validate() const {
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(test_frac > 0.0)) {
    throw std::invalid_argument("SplitSpec: every fraction must be > 0");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw std::invalid_argument("SplitSpec: fractions must sum to 1");
  }
}

SplitBounds split_bounds(std::size_t n, const SplitSpec& spec, std::size_t window_length) {
  spec.validate();
  SplitBounds b;
  b.size = n;
  const auto train = static_cast<std::size_t>(std::floor(spec.train_frac * static_cast<double>(n)));
  const auto val = static_cast<std::size_t>(std::floor(spec.val_frac * static_cast<double>(n)));
  b.train_end = train;
  b.val_end = std::min(n, train + val);
  const std::size_t need = window_length + 1;
  if (b.train_size() < need || b.val_size() < need || b.test_size() < need) {
    throw DataError("split_chrono: series of length " + std::to_string(n) + " splits into " +
                    std::to_string(b.train_size()) + "/" + std::to_string(b.val_size()) + "/" +
                    std::to_string(b.test_size()) + ", each segment needs at least " + std::to_string(need));
  }
  return b;
}

std::vector<TemperatureReading> parse_temperature_csv(std::istream& in, std::string_view source) {
  LineReader r{in, source};
  r.expect_header("timestamp,celsius");
  std::vector<TemperatureReading> out;
  while (r.next()) {
    if (r.line.empty()) continue;
    const auto f = r.fields(2);
    out.push_back({r.timestamp(f[0]), r.number(f[1], "celsius")});
    if (out.size() > 1 && !(out[out.size() - 2].timestamp < out.back().timestamp)) {
      r.fail("timestamps must be strictly increasing");
    }
  }
  if (out.empty()) throw DataError(std::string(source) + ": no temperature readings");
  return out;
}

void write_temperature_csv(std::ostream& out, std::span<const TimeStamp> time, std::span<const double> celsius) {
  if (time.size() != celsius.size()) throw DimensionError("write_temperature_csv: length mismatch");
  out << "timestamp,celsius\n";
  char buf[32];
  for (std::size_t t = 0; t < time.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.2f", celsius[t]);
    out << time[t].str() << ',' << buf << '\n';
  }
}

std::vector<double> align_temperature(std::span<const TemperatureReading> readings,
                                      std::span<const TimeStamp> grid) {
  if (readings.empty()) throw DataError("align_temperature: no temperature readings");
  constexpr std::int64_t kEdgeToleranceMinutes = 60;
  std::vector<double> out;
  out.reserve(grid.size());
  for (const auto& t : grid) {
    const auto it = std::lower_bound(readings.begin(), readings.end(), t,
                                     [](const TemperatureReading& r, const TimeStamp& v) { return r.timestamp < v; });
    if (it != readings.end() && it->timestamp == t) {
      out.push_back(it->celsius);
    } else if (it == readings.begin()) {
      if (it->timestamp.minutes() - t.minutes() > kEdgeToleranceMinutes) {
        throw DataError("align_temperature: no temperature near " + t.str());
      }
      out.push_back(it->celsius);
    } else if (it == readings.end()) {
      const auto& last = readings.back();
      if (t.minutes() - last.timestamp.minutes() > kEdgeToleranceMinutes) {
        throw DataError("align_temperature: no temperature near " + t.str());
      }
      out.push_back(last.celsius);
    } else {
      const auto& a = *(it - 1);
      const auto& b = *it;
      const double w = static_cast<double>(t.minutes() - a.timestamp.minutes()) /
                       static_cast<double>(b.timestamp.minutes() - a.timestamp.minutes());
      out.push_back(a.celsius + w * (b.celsius - a.celsius));
    }
  }
  return out;
}

ProfileSeries ProfileSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw std::out_of_range("ProfileSeries::slice: bad range");
  ProfileSeries s;
  s.cluster_id = cluster_id;
  s.time.assign(time.begin() + static_cast<std::ptrdiff_t>(begin), time.begin() + static_cast<std::ptrdiff_t>(end));
  s.consumption.assign(consumption.begin() + static_cast<std::ptrdiff_t>(begin),
                       consumption.begin() + static_cast<std::ptrdiff_t>(end));
  s.temperature.assign(temperature.begin() + static_cast<std::ptrdiff_t>(begin),
                       temperature.begin() + static_cast<std::ptrdiff_t>(end));
  return s;
}

const ClusterProfile& Dataset::cluster(int id) const {
  for (const auto& c : clusters) {
    if (c.cluster_id == id) return c;
  }
  throw DataError("no cluster with id " + std::to_string(id));
}

ProfileSeries Dataset::series(int cluster_id) const {
  const auto& c = cluster(cluster_id);
  return {cluster_id, time, c.profile, temperature};
}

Dataset assemble_dataset(std::span<const MeterReading> readings, std::span<const TemperatureReading> temperature,
                         const ClusterAssignment& assignment) {
  auto cleaned = drop_incomplete(build_matrix(readings));
  Dataset d;
  d.clusters = cluster_profile(cleaned.matrix, assignment);
  d.time = std::move(cleaned.matrix.time_index);
  d.temperature = align_temperature(temperature, d.time);
  d.removed = std::move(cleaned.removed);
  return d;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) throw DataError("cannot open " + (dir / name).string());
    return in;
  };
  const std::vector<std::filesystem::path> meter{dir / "meter.csv"};
  const auto readings = parse_meter_files(meter);
  auto tin = open("temperature.csv");
  const auto temperature = parse_temperature_csv(tin, (dir / "temperature.csv").string());
  auto cin = open("clusters.csv");
  const auto assignment = parse_cluster_csv(cin, (dir / "clusters.csv").string());
  return assemble_dataset(readings, temperature, assignment);
}

}  // namespace demandcast

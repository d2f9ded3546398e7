#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dqedmd/harness.hpp"

namespace dqedmd::harness {

namespace {

constexpr const char* kResultHeader =
    "system,word_length,epsilon,trial_index,rel_K_error,mean_rel_pred_error,"
    "recovery_rel_K_error,saturation_count,gram_condition,runtime_seconds";
constexpr const char* kTrajectoryHeader = "trajectory_id,t,x1,x2";

[[noreturn]] void io_fail(const std::string& msg) {
  throw std::runtime_error("results: " + msg);
}

// shortest representation that round-trips exactly
std::string format_double(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    io_fail("line " + std::to_string(line_no) + ": bad number \"" +
            std::string(field) + "\"");
  return v;
}

long parse_long(std::string_view field, std::size_t line_no) {
  long v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    io_fail("line " + std::to_string(line_no) + ": bad integer \"" +
            std::string(field) + "\"");
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void write_results(const std::vector<ResultRecord>& records,
                   const SweepSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) io_fail("cannot open \"" + path + "\" for writing");

  char hash_buf[17] = {};
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(summary.config_hash));
  out << "# " << summary.tool_version << " config_hash=" << hash_buf
      << " ref_mean_rel_pred_error="
      << format_double(summary.ref_mean_rel_pred_error) << "\n";
  out << kResultHeader << "\n";
  for (const auto& r : records) {
    if (r.system.find(',') != std::string::npos ||
        r.system.find('\n') != std::string::npos)
      io_fail("system name \"" + r.system + "\" is not CSV-safe");
    out << r.system << ',' << r.word_length << ',' << format_double(r.epsilon)
        << ',' << r.trial_index << ',' << format_double(r.rel_K_error) << ','
        << format_double(r.mean_rel_pred_error) << ',';
    if (r.recovery_rel_K_error) out << format_double(*r.recovery_rel_K_error);
    out << ',' << r.saturation_count << ','
        << format_double(r.gram_condition) << ','
        << format_double(r.runtime_seconds) << "\n";
  }
  if (!out) io_fail("write failure on \"" + path + "\"");
}

std::vector<ResultRecord> read_results(const std::string& path,
                                       SweepSummary* summary) {
  std::ifstream in(path);
  if (!in) io_fail("cannot open \"" + path + "\"");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) io_fail("empty file \"" + path + "\"");
  ++line_no;
  line = strip_cr(line);

  SweepSummary parsed_summary;
  bool have_meta = false;
  if (!line.empty() && line[0] == '#') {
    have_meta = true;
    std::string_view rest = std::string_view(line).substr(1);
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    const std::string hash_key = "config_hash=";
    const std::string ref_key = "ref_mean_rel_pred_error=";
    std::size_t hp = rest.find(hash_key);
    if (hp == std::string_view::npos)
      io_fail("metadata line lacks config_hash");
    std::string_view version = rest.substr(0, hp);
    while (!version.empty() && version.back() == ' ') version.remove_suffix(1);
    parsed_summary.tool_version = std::string(version);
    std::string_view hash_sv = rest.substr(hp + hash_key.size());
    std::size_t hash_end = hash_sv.find(' ');
    std::string_view hash_field = hash_sv.substr(0, hash_end);
    std::uint64_t hash = 0;
    auto res = std::from_chars(hash_field.data(),
                               hash_field.data() + hash_field.size(), hash, 16);
    if (res.ec != std::errc{} ||
        res.ptr != hash_field.data() + hash_field.size())
      io_fail("metadata line has a malformed config_hash");
    parsed_summary.config_hash = hash;
    std::size_t rp = rest.find(ref_key);
    if (rp == std::string_view::npos)
      io_fail("metadata line lacks ref_mean_rel_pred_error");
    parsed_summary.ref_mean_rel_pred_error =
        parse_double(rest.substr(rp + ref_key.size()), line_no);

    if (!std::getline(in, line)) io_fail("missing header line");
    ++line_no;
    line = strip_cr(line);
  }

  if (line != kResultHeader)
    io_fail("unexpected header \"" + line + "\"");

  std::vector<ResultRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 10)
      io_fail("line " + std::to_string(line_no) + ": expected 10 fields, got " +
              std::to_string(fields.size()));
    ResultRecord r;
    r.system = std::string(fields[0]);
    r.word_length = static_cast<int>(parse_long(fields[1], line_no));
    r.epsilon = parse_double(fields[2], line_no);
    r.trial_index = static_cast<int>(parse_long(fields[3], line_no));
    r.rel_K_error = parse_double(fields[4], line_no);
    r.mean_rel_pred_error = parse_double(fields[5], line_no);
    if (!fields[6].empty())
      r.recovery_rel_K_error = parse_double(fields[6], line_no);
    r.saturation_count = parse_long(fields[7], line_no);
    r.gram_condition = parse_double(fields[8], line_no);
    r.runtime_seconds = parse_double(fields[9], line_no);
    records.push_back(std::move(r));
  }
  if (summary) {
    if (!have_meta) {
      parsed_summary.tool_version.clear();
      parsed_summary.config_hash = 0;
    }
    *summary = parsed_summary;
  }
  return records;
}

void write_trajectories(const dynamics::TrajectorySet& set,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) io_fail("cannot open \"" + path + "\" for writing");
  out << kTrajectoryHeader << "\n";
  for (std::size_t m = 0; m < set.size(); ++m) {
    const auto& traj = set[m];
    if (traj.rows() != 2)
      io_fail("trajectory " + std::to_string(m) + " is not 2-dimensional");
    for (Eigen::Index t = 0; t < traj.cols(); ++t) {
      out << m << ',' << t << ',' << format_double(traj(0, t)) << ','
          << format_double(traj(1, t)) << "\n";
    }
  }
  if (!out) io_fail("write failure on \"" + path + "\"");
}

dynamics::TrajectorySet read_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_fail("cannot open \"" + path + "\"");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) io_fail("empty file \"" + path + "\"");
  ++line_no;
  if (strip_cr(line) != kTrajectoryHeader)
    io_fail("unexpected trajectory header \"" + line + "\"");

  // collect (t, state) runs per trajectory id; ids and steps must both be
  // consecutive from zero so the set round-trips losslessly
  std::vector<std::vector<std::array<double, 2>>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 4)
      io_fail("line " + std::to_string(line_no) + ": expected 4 fields, got " +
              std::to_string(fields.size()));
    long id = parse_long(fields[0], line_no);
    long t = parse_long(fields[1], line_no);
    double x1 = parse_double(fields[2], line_no);
    double x2 = parse_double(fields[3], line_no);
    if (id < 0 || id > static_cast<long>(rows.size()))
      io_fail("line " + std::to_string(line_no) +
              ": trajectory ids must be consecutive from 0");
    if (id == static_cast<long>(rows.size())) rows.emplace_back();
    if (t != static_cast<long>(rows[id].size()))
      io_fail("line " + std::to_string(line_no) +
              ": time steps of trajectory " + std::to_string(id) +
              " must be consecutive from 0");
    rows[id].push_back({x1, x2});
  }
  if (rows.empty()) io_fail("no trajectories in \"" + path + "\"");

  const std::size_t len = rows.front().size();
  dynamics::TrajectorySet set;
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (rows[m].size() != len)
      io_fail("trajectory " + std::to_string(m) + " has " +
              std::to_string(rows[m].size()) + " states, expected " +
              std::to_string(len));
    if (rows[m].size() < 1)
      io_fail("trajectory " + std::to_string(m) + " is empty");
    Eigen::MatrixXd traj(2, static_cast<Eigen::Index>(len));
    for (std::size_t t = 0; t < len; ++t) {
      traj(0, static_cast<Eigen::Index>(t)) = rows[m][t][0];
      traj(1, static_cast<Eigen::Index>(t)) = rows[m][t][1];
    }
    set.push_back(std::move(traj));
  }
  return set;
}

}  // namespace dqedmd::harness

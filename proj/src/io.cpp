#include "sfw/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sfw {

namespace {

constexpr char kMagic[8] = {'S', 'F', 'W', 'F', 'R', 'M', '0', '1'};

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed number '" + s + "' in " + context);
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  // %.17g always round-trips a double exactly.
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_localizations_csv(const std::filesystem::path& path,
                             const std::vector<LocalizationRow>& rows, int dim) {
  auto out = open_out(path);
  out << "frame,amplitude,x1";
  for (int j = 2; j <= dim; ++j) out << ",x" << j;
  out << "\n";
  for (const auto& r : rows) {
    out << r.frame << ',' << format_double(r.amplitude);
    for (int j = 0; j < dim; ++j) out << ',' << format_double(r.position[j]);
    out << "\n";
  }
}

std::vector<LocalizationRow> read_localizations_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty localization file: " + path.string());
  const auto header = split(line, ',');
  if (header.size() < 3 || header[0] != "frame" || header[1] != "amplitude")
    throw std::runtime_error("bad localization header in " + path.string());
  const int dim = static_cast<int>(header.size()) - 2;
  std::vector<LocalizationRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != dim + 2)
      throw std::runtime_error("bad localization row in " + path.string() + ": " + line);
    LocalizationRow r;
    r.frame = static_cast<int>(parse_double(cells[0], path.string()));
    r.amplitude = parse_double(cells[1], path.string());
    r.position.resize(dim);
    for (int j = 0; j < dim; ++j) r.position[j] = parse_double(cells[static_cast<std::size_t>(j) + 2], path.string());
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<DiscreteMeasure> group_by_frame(const std::vector<LocalizationRow>& rows,
                                            int frame_count) {
  int max_frame = frame_count - 1;
  for (const auto& r : rows) max_frame = std::max(max_frame, r.frame);
  std::vector<DiscreteMeasure> frames(static_cast<std::size_t>(max_frame + 1));
  for (const auto& r : rows) {
    if (r.frame < 0) throw std::runtime_error("negative frame index in localization file");
    frames[static_cast<std::size_t>(r.frame)].add(r.amplitude, r.position);
  }
  return frames;
}

void write_frames_binary(const std::filesystem::path& path, const std::vector<Vec>& frames) {
  auto out = open_out(path, std::ios::binary);
  const std::uint32_t m = frames.empty() ? 0 : static_cast<std::uint32_t>(frames.front().size());
  const auto count = static_cast<std::uint32_t>(frames.size());
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&m), sizeof(m));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& f : frames) {
    if (static_cast<std::uint32_t>(f.size()) != m)
      throw std::invalid_argument("write_frames_binary: inconsistent frame sizes");
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(sizeof(double)) * f.size());
  }
}

std::vector<Vec> read_frames_binary(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad frame-file magic in " + path.string());
  std::uint32_t m = 0, count = 0;
  in.read(reinterpret_cast<char*>(&m), sizeof(m));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw std::runtime_error("truncated frame header in " + path.string());
  std::vector<Vec> frames(count);
  for (auto& f : frames) {
    f.resize(m);
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(sizeof(double)) * m);
    if (!in) throw std::runtime_error("truncated frame data in " + path.string());
  }
  return frames;
}

void write_frames_csv(const std::filesystem::path& path, const std::vector<Vec>& frames) {
  auto out = open_out(path);
  for (const auto& f : frames) {
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (i) out << ',';
      out << format_double(f[i]);
    }
    out << "\n";
  }
}

std::vector<Vec> read_frames_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Vec> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    Vec f(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i)
      f[static_cast<Eigen::Index>(i)] = parse_double(cells[i], path.string());
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<Vec> read_frames_any(const std::filesystem::path& path) {
  {
    auto in = open_in(path, std::ios::binary);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (in && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0) return read_frames_binary(path);
  }
  return read_frames_csv(path);
}

nlohmann::json to_json(const SfwTrace& trace) {
  nlohmann::json j;
  j["termination"] = to_string(trace.termination);
  j["final_objective"] = trace.final_objective;
  j["final_certificate_max"] = trace.final_certificate_max;
  j["outer_iterations"] = trace.iterations.size();
  auto& iters = j["iterations"] = nlohmann::json::array();
  for (const auto& it : trace.iterations) {
    nlohmann::json r;
    r["iteration"] = it.iteration;
    r["certificate_max"] = it.certificate_max;
    r["objective"] = it.objective;
    r["spike_count"] = it.spike_count;
    if (it.inserted_position.size() > 0) {
      auto& pos = r["inserted_position"] = nlohmann::json::array();
      for (Eigen::Index k = 0; k < it.inserted_position.size(); ++k)
        pos.push_back(it.inserted_position[k]);
    }
    if (!it.inner_objectives.empty()) r["inner_objectives"] = it.inner_objectives;
    iters.push_back(std::move(r));
  }
  return j;
}

nlohmann::json to_json(const NondegeneracyReport& report) {
  nlohmann::json j;
  j["max_abs_off_support"] = report.max_abs_off_support;
  auto& arg = j["argmax_off_support"] = nlohmann::json::array();
  for (Eigen::Index k = 0; k < report.argmax_off_support.size(); ++k)
    arg.push_back(report.argmax_off_support[k]);
  j["hessian_determinants"] = report.hessian_dets;
  if (report.eta_deriv_2n) j["eta_derivative_2n"] = *report.eta_deriv_2n;
  j["verdict"] = report.nondegenerate ? "nondegenerate" : "degenerate";
  j["grid_per_axis"] = report.grid_per_axis;
  j["exclusion_steps"] = report.options.exclusion_steps;
  j["hessian_step"] = report.options.hessian_step;
  j["det_floor"] = report.options.det_floor;
  return j;
}

nlohmann::json to_json(const OptimalityReport& report) {
  nlohmann::json j;
  j["max_certificate"] = report.max_certificate;
  j["value_residuals"] = report.value_residuals;
  j["gradient_norms"] = report.gradient_norms;
  j["optimal"] = report.optimal;
  j["tol"] = report.tol;
  return j;
}

nlohmann::json to_json(const FrameScore& score) {
  nlohmann::json j;
  j["jaccard"] = score.jaccard;
  j["recall"] = score.recall;
  j["precision"] = score.precision;
  j["tp"] = score.tp;
  j["fp"] = score.fp;
  j["fn"] = score.fn;
  auto& rmse = j["rmse"] = nlohmann::json::array();
  for (Eigen::Index k = 0; k < score.rmse.size(); ++k) rmse.push_back(score.rmse[k]);
  return j;
}

nlohmann::json to_json(const AggregateScore& agg) {
  nlohmann::json j;
  j["frames"] = agg.frames;
  j["per_frame_mean"] = to_json(agg.per_frame_mean);
  j["pooled"] = to_json(agg.pooled);
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace sfw

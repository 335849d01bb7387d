#include "sgno/report.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sgno/errors.hpp"

namespace sgno {

namespace {

nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(x > 0 ? "inf" : (x < 0 ? "-inf" : "nan"));
}

nlohmann::json series_json(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(finite_or_null(x));
  return a;
}

struct Frame {
  double x0, x1, y0, y1;  // data ranges
  bool log_y;
  static constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;

  double px(double x) const { return L + (x - x0) / (x1 - x0) * (W - L - R); }
  double py(double y) const {
    const double t = log_y ? (std::log10(y) - std::log10(y0)) / (std::log10(y1) - std::log10(y0))
                           : (y - y0) / (y1 - y0);
    return H - B - std::clamp(t, 0.0, 1.0) * (H - T - B);
  }
};

std::string svg_open(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::W << "\" height=\"" << Frame::H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << Frame::W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
  return os.str();
}

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream os;
  os << std::setprecision(4);
  os << "<line x1=\"" << Frame::L << "\" y1=\"" << Frame::H - Frame::B << "\" x2=\"" << Frame::W - Frame::R
     << "\" y2=\"" << Frame::H - Frame::B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << Frame::L << "\" y1=\"" << Frame::T << "\" x2=\"" << Frame::L << "\" y2=\""
     << Frame::H - Frame::B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
    os << "<text x=\"" << f.px(x) << "\" y=\"" << Frame::H - Frame::B + 16 << "\" text-anchor=\"middle\">" << x
       << "</text>\n";
    const double y = f.log_y ? std::pow(10.0, std::log10(f.y0) + (std::log10(f.y1) - std::log10(f.y0)) * i / 4.0)
                             : f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << Frame::L - 6 << "\" y=\"" << f.py(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
  }
  os << "<text x=\"" << (Frame::L + Frame::W - Frame::R) / 2 << "\" y=\"" << Frame::H - 12
     << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << Frame::H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << Frame::H / 2 << ")\">" << ylabel << "</text>\n";
  return os.str();
}

}  // namespace

nlohmann::json to_json(const RolloutReport& r) {
  nlohmann::json j;
  j["gmean"] = finite_or_null(r.gmean.value);
  j["gmean_diverged"] = r.gmean.diverged;
  j["gmean_horizon"] = r.gmean.horizon;
  j["gmean_label"] = "GMean" + std::to_string(r.gmean.horizon) + " (" + r.reduction + " over test trajectories)";
  j["reduction"] = r.reduction;
  j["per_step"] = series_json(r.per_step);
  j["stable_step"] = r.stable_step;
  j["tau"] = r.tau;
  j["t_eval"] = r.t_eval;
  j["stride"] = r.stride;
  j["frames"] = r.frames;
  j["seed"] = r.seed;
  j["num_trajectories"] = r.nrmse.rows();
  return j;
}

nlohmann::json to_json(const SeedSummary& s) {
  nlohmann::json j;
  j["median_gmean"] = finite_or_null(s.median_gmean);
  j["gmeans"] = series_json(s.gmeans);
  j["stable_step"] = {{"median", s.stable_median}, {"q25", s.stable_q25}, {"q75", s.stable_q75}};
  nlohmann::json cdf = nlohmann::json::array();
  for (const auto& p : s.stable_cdf) cdf.push_back({p.x, p.f});
  j["stable_cdf"] = cdf;
  j["representative_seed_index"] = s.representative;
  return j;
}

std::string nrmse_csv(const RolloutReport& r) {
  std::ostringstream os;
  os << std::setprecision(10) << "trajectory";
  for (Eigen::Index t = 0; t < r.nrmse.cols(); ++t) os << ",t" << (t + 1) * r.stride;
  os << '\n';
  for (Eigen::Index i = 0; i < r.nrmse.rows(); ++i) {
    os << i;
    for (Eigen::Index t = 0; t < r.nrmse.cols(); ++t) os << ',' << r.nrmse(i, t);
    os << '\n';
  }
  return os.str();
}

std::string error_band_svg(const std::vector<double>& median, const std::vector<double>& p10,
                           const std::vector<double>& p90, const std::string& title, int stride) {
  if (median.size() != p10.size() || median.size() != p90.size()) throw DimensionError("error band: ragged series");
  double lo = 1e300, hi = 1e-300;
  for (const auto* v : {&median, &p10, &p90}) {
    for (double x : *v) {
      if (std::isfinite(x) && x > 0.0) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
  }
  if (lo > hi) lo = 1e-3, hi = 1.0;
  lo = std::pow(10.0, std::floor(std::log10(lo)));
  hi = std::pow(10.0, std::ceil(std::log10(hi)));
  if (hi <= lo) hi = lo * 10.0;
  const double n = static_cast<double>(std::max<std::size_t>(median.size(), 1));
  Frame f{1.0 * stride, n * stride, lo, hi, true};
  auto clampv = [&](double x) { return std::isfinite(x) && x > 0.0 ? x : (x > 0 ? hi : lo); };

  std::ostringstream os;
  os << std::setprecision(6) << svg_open(title) << axes(f, "rollout step", "nRMSE");
  os << "<polygon fill=\"steelblue\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
  for (std::size_t t = 0; t < p90.size(); ++t) os << f.px((t + 1.0) * stride) << ',' << f.py(clampv(p90[t])) << ' ';
  for (std::size_t t = p10.size(); t-- > 0;) os << f.px((t + 1.0) * stride) << ',' << f.py(clampv(p10[t])) << ' ';
  os << "\"/>\n<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t t = 0; t < median.size(); ++t) {
    os << f.px((t + 1.0) * stride) << ',' << f.py(clampv(median[t])) << ' ';
  }
  os << "\"/>\n<text x=\"" << Frame::W - Frame::R - 4 << "\" y=\"" << Frame::T + 12
     << "\" text-anchor=\"end\">median, p10-p90 band</text>\n</svg>\n";
  return os.str();
}

std::string stable_cdf_svg(const std::vector<CdfPoint>& cdf, int horizon, const std::string& title) {
  Frame f{0.0, static_cast<double>(std::max(horizon, 1)), 0.0, 1.0, false};
  std::ostringstream os;
  os << std::setprecision(6) << svg_open(title) << axes(f, "stable step", "fraction of trajectories");
  os << "<polyline fill=\"none\" stroke=\"darkred\" stroke-width=\"2\" points=\"" << f.px(0) << ',' << f.py(0) << ' ';
  double prev = 0.0;
  for (const auto& p : cdf) {
    os << f.px(p.x) << ',' << f.py(prev) << ' ' << f.px(p.x) << ',' << f.py(p.f) << ' ';
    prev = p.f;
  }
  os << f.px(horizon) << ',' << f.py(prev) << "\"/>\n</svg>\n";
  return os.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

nlohmann::json platform_fingerprint() {
  nlohmann::json j;
  utsname u{};
  if (uname(&u) == 0) {
    j["system"] = u.sysname;
    j["release"] = u.release;
    j["machine"] = u.machine;
  }
#if defined(__clang__)
  j["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  j["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  j["cxx_standard"] = static_cast<long>(__cplusplus);
  return j;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seeds"] = m.seeds;
  j["artifacts"] = m.artifacts;
  j["parameter_count"] = m.parameter_count;
  j["deterministic"] = m.deterministic;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["platform"] = platform_fingerprint();
  if (!m.extra.empty()) j["extra"] = m.extra;
  return j;
}

void append_manifest(const std::filesystem::path& path, const RunManifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw FormatError("cannot append to manifest " + path.string());
  out << to_json(m).dump() << '\n';
}

}  // namespace sgno

#include "droq/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "droq/checkpoint.hpp"
#include "droq/errors.hpp"

namespace droq {
namespace {

constexpr std::size_t kCsvColumns = 11;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ConfigError("metrics csv: bad number '" + s + "'");
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

struct Panel {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void draw_panel(std::string& svg, const Panel& panel, double top, double width, double height) {
  const double left = 70.0;
  const double right = width - 20.0;
  const double bottom = top + height;
  svg += fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#888"/>)", left, top,
                     right - left, height);
  svg += "\n";
  svg += fmt::format(R"(<text x="{}" y="{}" font-size="13">{}</text>)", left, top - 6, svg_escape(panel.label));
  svg += "\n";
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : panel.points) {
    if (std::isfinite(p.first) && std::isfinite(p.second)) pts.push_back(p);
  }
  if (pts.empty()) return;
  double x0 = pts.front().first, x1 = x0, y0 = pts.front().second, y1 = y0;
  for (const auto& [x, y] : pts) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * (right - left); };
  auto sy = [&](double y) { return bottom - (y - y0) / (y1 - y0) * height; };
  svg += fmt::format(R"(<text x="{}" y="{}" font-size="11" text-anchor="end">{:.4g}</text>)", left - 4, top + 10, y1);
  svg += "\n";
  svg += fmt::format(R"(<text x="{}" y="{}" font-size="11" text-anchor="end">{:.4g}</text>)", left - 4, bottom, y0);
  svg += "\n";
  svg += fmt::format(R"(<text x="{}" y="{}" font-size="11">{:.6g}</text>)", left, bottom + 14, x0);
  svg += "\n";
  svg += fmt::format(R"(<text x="{}" y="{}" font-size="11" text-anchor="end">{:.6g}</text>)", right, bottom + 14, x1);
  svg += "\n";
  svg += R"(<polyline fill="none" stroke="#1f6fb4" stroke-width="1.5" points=")";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    svg += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", sx(pts[i].first), sy(pts[i].second));
  }
  svg += "\"/>\n";
}

}  // namespace

std::string metrics_csv_header() {
  return "env_step,avg_return,avg_bias,std_bias,q_loss_mean,q_loss_std,q_grad_mean,q_grad_std,wall_ms_per_loop,"
         "wall_ms_per_qupdate,param_count";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", r.env_step, r.avg_return, r.avg_bias, r.std_bias,
                     r.q_loss_mean, r.q_loss_std, r.q_grad_mean, r.q_grad_std, r.wall_ms_per_loop,
                     r.wall_ms_per_qupdate, r.param_count);
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) {
    throw ConfigError(path.string() + ": unexpected metrics header");
  }
  std::vector<MetricsRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> c = split(line, ',');
    if (c.size() != kCsvColumns) throw ConfigError(path.string() + ": wrong column count");
    MetricsRecord r;
    r.env_step = std::stoull(c[0]);
    r.avg_return = parse_real(c[1]);
    r.avg_bias = parse_real(c[2]);
    r.std_bias = parse_real(c[3]);
    r.q_loss_mean = parse_real(c[4]);
    r.q_loss_std = parse_real(c[5]);
    r.q_grad_mean = parse_real(c[6]);
    r.q_grad_std = parse_real(c[7]);
    r.wall_ms_per_loop = parse_real(c[8]);
    r.wall_ms_per_qupdate = parse_real(c[9]);
    r.param_count = std::stoull(c[10]);
    out.push_back(r);
  }
  return out;
}

std::string render_curves_svg(const std::vector<MetricsRecord>& records, const std::string& title) {
  const double width = 640.0;
  const double panel_h = 200.0;
  Panel ret{"average return", {}};
  Panel bias{"average normalized bias", {}};
  for (const MetricsRecord& r : records) {
    ret.points.emplace_back(static_cast<double>(r.env_step), r.avg_return);
    bias.points.emplace_back(static_cast<double>(r.env_step), r.avg_bias);
  }
  std::string svg = fmt::format(
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">)", width,
      2 * panel_h + 130);
  svg += "\n";
  svg += fmt::format(R"(<rect width="100%" height="100%" fill="white"/>)");
  svg += "\n";
  if (!title.empty()) {
    svg += fmt::format(R"(<text x="{}" y="20" font-size="15" text-anchor="middle">{}</text>)", width / 2,
                       svg_escape(title));
    svg += "\n";
  }
  draw_panel(svg, ret, 50.0, width, panel_h);
  draw_panel(svg, bias, 100.0 + panel_h, width, panel_h);
  svg += fmt::format(R"(<text x="{}" y="{}" font-size="12" text-anchor="middle">environment steps</text>)",
                     width / 2, 2 * panel_h + 125);
  svg += "\n</svg>\n";
  return svg;
}

void write_curves_svg(const std::vector<MetricsRecord>& records, const std::filesystem::path& path,
                      const std::string& title) {
  write_text(path, render_curves_svg(records, title));
}

int run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log) {
  std::vector<MetricsRecord> records;
  try {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "config.resolved.json", resolved_config_json(config));
    std::ofstream csv(out_dir / "metrics.csv", std::ios::binary);
    if (!csv) throw ConfigError("cannot write " + (out_dir / "metrics.csv").string());
    csv << metrics_csv_header() << '\n';

    TrainOptions options;
    options.on_epoch = [&](const MetricsRecord& r) {
      records.push_back(r);
      csv << metrics_csv_row(r) << '\n';
      csv.flush();
    };
    options.on_checkpoint = [&](const Trainer& trainer, std::size_t epoch) {
      std::filesystem::create_directories(out_dir / "checkpoints");
      Checkpoint ckpt;
      trainer.save(ckpt);
      ckpt.save(out_dir / "checkpoints" / fmt::format("epoch_{}.ckpt", epoch));
    };
    train(config.trainer, options);
    write_curves_svg(records, out_dir / "curves.svg", config.variant_tag);
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const NumericError& e) {
    log << "diverged: " << e.what() << '\n';
    if (!records.empty()) write_curves_svg(records, out_dir / "curves.svg", config.variant_tag + " (diverged)");
    return kExitDiverged;
  }
}

int run_experiment(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                   const std::filesystem::path& out_dir, std::ostream& log) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  }
  if (seed) config = config.with_seed(*seed);
  return run_experiment(config, out_dir, log);
}

int run_ablation(const std::filesystem::path& config_path, const std::vector<std::string>& variants,
                 const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out_dir, std::ostream& log) {
  ExperimentConfig base;
  std::vector<ExperimentConfig> runs;
  try {
    base = load_config(config_path);
    for (const std::string& tag : variants) runs.push_back(base.with_variant(tag));
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  }
  int worst = kExitOk;
  for (const ExperimentConfig& run : runs) {
    for (std::uint64_t seed : seeds) {
      const std::filesystem::path dir = out_dir / fmt::format("{}_seed{}", run.variant_tag, seed);
      const int status = run_experiment(run.with_seed(seed), dir, log);
      log << fmt::format("{} seed {}: exit {}\n", run.variant_tag, seed, status);
      worst = std::max(worst, status);
    }
  }
  return worst;
}

}  // namespace droq

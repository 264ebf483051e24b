#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "climssm/analysis.hpp"
#include "climssm/error.hpp"
#include "climssm/estimation.hpp"
#include "climssm/forecast.hpp"
#include "climssm/model.hpp"
#include "climssm/ssm.hpp"
#include "climssm/timeseries.hpp"
#include "svg.hpp"

namespace climssm::cli {

namespace chr = std::chrono;
namespace fs = std::filesystem;
using model::ForcingKind;
using model::ModelConfig;

namespace {

constexpr const char* kBlue = "#2166ac";
constexpr const char* kRed = "#b2182b";
constexpr const char* kGrey = "#555555";

DailySeries load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("--data is required");
  DailySeries data = load_csv(cfg.data);
  if (cfg.first_year || cfg.last_year) {
    const int first = cfg.first_year.value_or(year_of(data.start()));
    const int last = cfg.last_year.value_or(year_of(data.end()));
    data = data.slice(Date{chr::year{first}, chr::January, chr::day{1}},
                      Date{chr::year{last}, chr::December, chr::day{31}});
  }
  if (data.observed_count() == 0) throw DataError(cfg.data.string() + ": no observed values");
  return data;
}

ModelConfig load_model(const RunConfig& cfg) {
  ModelConfig c = cfg.config.empty() ? ModelConfig{} : model::load_config(cfg.config);
  c.validate();
  return c;
}

fs::path prepare_out(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) throw DataError("cannot create output directory " + cfg.out.string());
  return cfg.out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

int first_full_year(const DailySeries& data) {
  const int y = year_of(data.start());
  return month_of(data.start()) == 1 && day_of(data.start()) == 1 ? y : y + 1;
}

std::vector<double> indices(std::size_t n, double offset = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) + offset;
  return x;
}

double decimal_year(const Date& d) {
  return year_of(d) + (day_of_year_366(d) - 0.5) / 366.0;
}

}  // namespace

// --- explore -------------------------------------------------------------------

std::vector<fs::path> cmd_explore(const RunConfig& cfg) {
  const DailySeries data = load_data(cfg);
  const fs::path dir = prepare_out(cfg);
  const HarmonicFit fit = fit_harmonics(data, 2, true);
  const DailySeries residual = residualize(data, fit);

  std::vector<double> filled(data.values().begin(), data.values().end());
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (data.missing(i)) filled[i] = fit.evaluate(data.date_at(i));
  }
  const auto spectrum = periodogram(DailySeries(data.start(), filled));
  const auto r = acf(residual, cfg.max_lag);
  const auto partial = pacf(residual, cfg.max_lag);
  const auto doy = first_diff_doy_variance(data);

  std::vector<fs::path> files{dir / "periodogram.csv", dir / "acf.csv", dir / "pacf.csv", dir / "doy_variance.csv",
                              dir / "explore.svg"};
  {
    auto out = open_out(files[0]);
    out << "frequency,power\n";
    for (const auto& p : spectrum) out << format_double(p.frequency) << ',' << format_double(p.power) << '\n';
  }
  {
    auto out = open_out(files[1]);
    out << "lag,acf\n";
    for (std::size_t k = 0; k < r.size(); ++k) out << k << ',' << format_double(r[k]) << '\n';
  }
  {
    auto out = open_out(files[2]);
    out << "lag,pacf\n";
    for (std::size_t k = 1; k < partial.size(); ++k) out << k << ',' << format_double(partial[k]) << '\n';
  }
  {
    auto out = open_out(files[3]);
    out << "doy,variance\n";
    for (const auto& d : doy) out << d.doy << ',' << format_double(d.variance) << '\n';
  }

  SvgCanvas svg(900, 640);
  {
    // frequencies up to six cycles per year, power on a log scale
    std::vector<double> f, lp;
    for (const auto& p : spectrum) {
      const double per_year = p.frequency * 365.25;
      if (per_year > 6.0) break;
      f.push_back(per_year);
      lp.push_back(p.power > 0 ? std::log10(p.power) : kMissing);
    }
    const auto [lo, hi] = data_range({lp});
    const auto p = svg.panel(70, 30, 340, 230, 0.0, 6.0, lo, hi, "Periodogram", "cycles per year", "log10 power");
    svg.line(p, f, lp, kBlue);
  }
  const double band = 1.96 / std::sqrt(static_cast<double>(residual.observed_count()));
  {
    const auto lags = indices(r.size());
    const auto [lo, hi] = data_range({r, std::vector<double>{-band}});
    const auto p = svg.panel(520, 30, 340, 230, -0.5, static_cast<double>(cfg.max_lag) + 0.5, std::min(lo, 0.0), hi,
                             "Autocorrelation of residuals", "lag (days)");
    svg.bars(p, lags, r, 0.6, kBlue);
    svg.hline(p, band, kRed);
    svg.hline(p, -band, kRed);
  }
  {
    std::vector<double> lags, v;
    for (std::size_t k = 1; k < partial.size(); ++k) {
      lags.push_back(static_cast<double>(k));
      v.push_back(partial[k]);
    }
    const auto [lo, hi] = data_range({v, std::vector<double>{-band, band}});
    const auto p = svg.panel(70, 360, 340, 230, 0.5, static_cast<double>(cfg.max_lag) + 0.5, lo, hi,
                             "Partial autocorrelation", "lag (days)");
    svg.bars(p, lags, v, 0.6, kBlue);
    svg.hline(p, 0.0, kGrey, false);
    svg.hline(p, band, kRed);
    svg.hline(p, -band, kRed);
  }
  {
    std::vector<double> x, v;
    for (const auto& d : doy) {
      x.push_back(d.doy);
      v.push_back(d.variance);
    }
    const auto [lo, hi] = data_range({v});
    const auto p = svg.panel(520, 360, 340, 230, 1.0, 366.0, lo, hi, "Variance of day-to-day change",
                             "day of year", "hPa^2");
    svg.line(p, x, v, kBlue);
  }
  svg.save(files[4]);
  return files;
}

// --- fit -------------------------------------------------------------------------

std::vector<fs::path> cmd_fit(const RunConfig& cfg, bool* converged) {
  const DailySeries data = load_data(cfg);
  const ModelConfig initial = load_model(cfg);
  const fs::path dir = prepare_out(cfg);
  const auto report = estimation::fit_mle(initial, data);
  std::vector<fs::path> files{dir / "fit_report.txt", dir / "fitted.cfg"};
  {
    auto out = open_out(files[0]);
    estimation::write_report(report, out);
  }
  model::save_config(report.config, files[1]);
  if (converged) *converged = report.status == optim::Status::converged;
  return files;
}

// --- select ----------------------------------------------------------------------

std::vector<fs::path> cmd_select(const RunConfig& cfg) {
  const DailySeries data = load_data(cfg);
  const ModelConfig base = load_model(cfg);
  const fs::path dir = prepare_out(cfg);
  std::vector<ForcingKind> kinds;
  for (const auto& k : cfg.kinds) {
    const auto kind = model::parse_forcing_kind(k);
    if (kind == ForcingKind::none) throw ConfigError("the null model is always included; list forced kinds only");
    kinds.push_back(kind);
  }
  const auto family = model::influence_family(cfg.lengths, cfg.start_months, base.influence.taper_days);
  estimation::GridOptions options;
  options.threads = std::max(1u, cfg.threads);
  const auto rows = estimation::grid_search(data, base, family, kinds, options);

  std::vector<fs::path> files{dir / "grid.csv", dir / "bic_heatmap.svg"};
  {
    auto out = open_out(files[0]);
    estimation::write_grid_csv(rows, out);
  }

  double null_bic = kMissing;
  for (const auto& r : rows) {
    if (!r.influence && !r.failed) null_bic = r.report.bic;
  }
  std::vector<int> lengths;
  for (const auto& fn : family) {
    if (std::find(lengths.begin(), lengths.end(), fn.length_days) == lengths.end()) lengths.push_back(fn.length_days);
  }
  std::sort(lengths.begin(), lengths.end());
  double spread = 0.0;
  for (const auto& r : rows) {
    if (r.influence && !r.failed && std::isfinite(null_bic)) spread = std::max(spread, std::abs(r.report.bic - null_bic));
  }
  if (!(spread > 0)) spread = 1.0;

  SvgCanvas svg(460.0 * static_cast<double>(kinds.size()) + 40.0, 420);
  const double step = lengths.size() > 1 ? lengths[1] - lengths[0] : 30.0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto p = svg.panel(70 + 460.0 * static_cast<double>(k), 40, 360, 300, 0.5, 12.5,
                             lengths.front() - step / 2, lengths.back() + step / 2,
                             "BIC minus null: " + model::to_string(kinds[k]), "start month", "length (days)");
    for (const auto& r : rows) {
      if (r.kind != kinds[k] || !r.influence) continue;
      const double m = r.influence->start_month;
      const double len = r.influence->length_days;
      const std::string colour =
          r.failed ? "#999999" : diverging_colour(0.5 + (r.report.bic - null_bic) / (2.0 * spread));
      svg.rect(p, m - 0.5, len - step / 2, m + 0.5, len + step / 2, colour);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "null model BIC = %.1f; blue is below the null, red above (scale +/- %.1f)",
                null_bic, spread);
  svg.text(70, 395, buf, 11.0);
  svg.save(files[1]);
  return files;
}

// --- analyze ---------------------------------------------------------------------

std::vector<fs::path> cmd_analyze(const RunConfig& cfg) {
  const DailySeries data = load_data(cfg);
  const ModelConfig config = load_model(cfg);
  const fs::path dir = prepare_out(cfg);
  if (cfg.members < 1) throw ConfigError("--members must be at least 1");
  const auto& layout = config.layout;
  const auto fn = config.build(data.start());
  const auto filter = ssm::ekf_filter(fn, config.state_priors().to_state(), data);

  std::vector<int> winters = cfg.winters;
  if (layout.kind == ForcingKind::mean_shift && winters.empty()) {
    for (int w = year_of(data.end()); w > year_of(data.start()); --w) {
      if (data.index_of(Date{chr::year{w - 1}, chr::November, chr::day{1}}) >= 0 &&
          data.index_of(Date{chr::year{w}, chr::April, chr::day{30}}) >= 0) {
        winters.push_back(w);
        break;
      }
    }
  }
  if (layout.kind != ForcingKind::mean_shift) winters.clear();
  std::vector<long> winter_first;
  std::vector<long> winter_count;
  for (int w : winters) {
    const Date first{chr::year{w - 1}, chr::November, chr::day{1}};
    const Date last{chr::year{w}, chr::April, chr::day{30}};
    const long i0 = data.index_of(first), i1 = data.index_of(last);
    if (i0 < 0 || i1 < 0) throw DataError("winter " + std::to_string(w) + " is outside the data");
    winter_first.push_back(i0);
    winter_count.push_back(i1 - i0 + 1);
  }

  const auto seasons = Season::standard();
  std::vector<std::optional<analysis::SeasonalMeans>> means(seasons.size());
  ssm::TrajectoryEnsemble thinned;
  std::vector<ssm::TrajectoryEnsemble> winter_paths(winters.size());
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch);
  for (std::size_t first = 0; first < cfg.members; first += batch) {
    const std::size_t count = std::min(batch, cfg.members - first);
    auto ens = ssm::sample_trajectories(fn, filter, count, cfg.seed, first);
    const auto comps = analysis::decompose(ens, layout, config.influence, data);
    for (std::size_t s = 0; s < seasons.size(); ++s) {
      auto sm = analysis::seasonal_means(comps, seasons[s]);
      if (means[s]) {
        means[s]->merge(std::move(sm));
      } else {
        means[s] = std::move(sm);
      }
    }
    thinned.append(analysis::thin(ens, cfg.summary_stride));
    for (std::size_t w = 0; w < winters.size(); ++w) {
      winter_paths[w].append(analysis::rows(ens, winter_first[w], winter_count[w]));
    }
  }

  std::vector<fs::path> files;
  std::vector<analysis::AnovaRow> anova_rows;
  for (std::size_t s = 0; s < seasons.size(); ++s) anova_rows.push_back(analysis::anova(*means[s]));
  files.push_back(dir / "anova.csv");
  {
    auto out = open_out(files.back());
    analysis::write_anova_csv(anova_rows, out);
  }
  for (std::size_t s = 0; s < seasons.size(); ++s) {
    files.push_back(dir / ("attribution_" + seasons[s].label + ".csv"));
    auto out = open_out(files.back());
    analysis::write_attribution_csv(analysis::attribute_years(*means[s]), out);
  }
  const auto summaries = analysis::component_summaries(thinned, layout, data.start(), cfg.summary_stride);
  files.push_back(dir / "components.csv");
  {
    auto out = open_out(files.back());
    analysis::write_summaries_csv(summaries, out);
  }
  std::vector<analysis::BandSeries> bands;
  for (std::size_t w = 0; w < winters.size(); ++w) {
    bands.push_back(analysis::forcing_evolution(winter_paths[w], layout, data.date_at(static_cast<std::size_t>(winter_first[w])),
                                                winters[w]));
    files.push_back(dir / ("forcing_" + std::to_string(winters[w]) + ".csv"));
    auto out = open_out(files.back());
    analysis::write_band_csv(bands.back(), out);
  }

  std::optional<analysis::CheckReport> check;
  {
    analysis::CheckOptions options;
    options.threads = std::max(1u, cfg.threads);
    const int start = cfg.check_start.value_or(first_full_year(data) + 20);
    const int full_years = year_of(data.end()) - start + (month_of(data.end()) == 12 && day_of(data.end()) == 31);
    if (cfg.check_start || full_years >= options.min_years) {
      check = analysis::posterior_predictive_check(config, data, start, cfg.check_realizations, cfg.seed, options);
      files.push_back(dir / "check.csv");
      auto out = open_out(files.back());
      analysis::write_check_csv(*check, out);
    }
  }

  // plots
  {
    SvgCanvas svg(720, 360);
    const auto p = svg.panel(70, 40, 600, 260, 0.0, static_cast<double>(seasons.size()), 0.0, 1.0,
                             "Share of inter-annual variance of seasonal means", "", "fraction");
    const char* colours[] = {"#7f7f7f", kRed, kBlue, "#d9b300"};
    for (std::size_t s = 0; s < anova_rows.size(); ++s) {
      for (int c = 0; c < analysis::kAnovaComponents; ++c) {
        const auto& f = anova_rows[s].fractions[static_cast<std::size_t>(c)];
        const double x = static_cast<double>(s) + 0.15 + 0.18 * c;
        svg.rect(p, x, 0.0, x + 0.16, std::clamp(f.mean, 0.0, 1.0), colours[c]);
        const double mid = x + 0.08;
        const std::vector<double> xs{mid, mid}, ys{std::clamp(f.lo, 0.0, 1.0), std::clamp(f.hi, 0.0, 1.0)};
        svg.line(p, xs, ys, "#000000");
      }
      svg.text(p.px(static_cast<double>(s) + 0.5), 318, seasons[s].label, 11.0, "middle");
    }
    for (int c = 0; c < analysis::kAnovaComponents; ++c) {
      svg.rect(p, 0.05 + 0.9 * c, 0.93, 0.12 + 0.9 * c, 0.98, colours[c]);
      svg.text(p.px(0.15 + 0.9 * c), p.py(0.94), analysis::anova_component_name(c), 10.0);
    }
    files.push_back(dir / "anova.svg");
    svg.save(files.back());
  }
  {
    SvgCanvas svg(760, 620);
    std::vector<double> t;
    for (const auto& d : summaries.dates) t.push_back(decimal_year(d));
    auto column = [&](const std::string& name, auto member) {
      std::vector<double> v;
      const auto it = std::find(summaries.names.begin(), summaries.names.end(), name);
      if (it == summaries.names.end()) return v;
      const auto j = static_cast<std::size_t>(it - summaries.names.begin());
      for (const auto& row : summaries.rows) v.push_back(row[j].*member);
      return v;
    };
    const auto [x0, x1] = data_range({t}, 0.0);
    int top = 40;
    for (const std::string name : {"mu", "amplitude_1", "phi_1"}) {
      const auto m = column(name, &stats::Interval::mean);
      if (m.empty()) continue;
      const auto lo = column(name, &stats::Interval::lo);
      const auto hi = column(name, &stats::Interval::hi);
      const auto [y0, y1] = data_range({lo, hi});
      const auto p = svg.panel(80, top, 640, 150, x0, x1, y0, y1, name, "year");
      svg.band(p, t, lo, hi, kBlue);
      svg.line(p, t, m, kBlue, 1.5);
      top += 195;
    }
    files.push_back(dir / "trend.svg");
    svg.save(files.back());
  }
  for (std::size_t w = 0; w < bands.size(); ++w) {
    SvgCanvas svg(720, 340);
    std::vector<double> x, m, lo, hi;
    for (std::size_t i = 0; i < bands[w].dates.size(); ++i) {
      x.push_back(static_cast<double>(i));
      m.push_back(bands[w].values[i].mean);
      lo.push_back(bands[w].values[i].lo);
      hi.push_back(bands[w].values[i].hi);
    }
    const auto [y0, y1] = data_range({lo, hi});
    const auto p = svg.panel(70, 40, 600, 240, 0.0, static_cast<double>(x.size()), y0, y1,
                             "Forced component, winter " + std::to_string(winters[w]), "days since 1 November",
                             "hPa");
    svg.band(p, x, lo, hi, kRed);
    svg.line(p, x, m, kRed, 1.5);
    svg.hline(p, 0.0, kGrey, false);
    files.push_back(dir / ("forcing_" + std::to_string(winters[w]) + ".svg"));
    svg.save(files.back());
  }
  if (check) {
    SvgCanvas svg(720, 340);
    std::vector<double> x, obs, lo, hi;
    for (const auto& row : check->rows) {
      if (row.statistic.rfind("sd_month_", 0) != 0) continue;
      x.push_back(static_cast<double>(x.size() + 1));
      obs.push_back(row.observed);
      lo.push_back(row.lo);
      hi.push_back(row.hi);
    }
    const auto [y0, y1] = data_range({obs, lo, hi});
    const auto p = svg.panel(70, 40, 600, 240, 0.5, 12.5, y0, y1, "Inter-annual SD of monthly means", "month", "hPa");
    svg.band(p, x, lo, hi, kBlue);
    svg.points(p, x, obs, kRed, 3.0);
    files.push_back(dir / "check.svg");
    svg.save(files.back());
  }
  return files;
}

// --- forecast --------------------------------------------------------------------

std::vector<fs::path> cmd_forecast(const RunConfig& cfg) {
  const DailySeries data = load_data(cfg);
  const ModelConfig config = load_model(cfg);
  const fs::path dir = prepare_out(cfg);
  if (cfg.members < 1) throw ConfigError("--members must be at least 1");
  const int from = cfg.forecast_from.value_or(first_full_year(data) + 20);

  std::optional<forecast::PointForecasts> external;
  if (!cfg.external.empty()) external = forecast::load_external_csv(cfg.external);

  std::vector<fs::path> files;
  std::ostringstream report;
  report << "members = " << cfg.members << "\nseed = " << cfg.seed << "\nwindow = " << cfg.window << '\n';
  const auto seasons = Season::standard();
  for (std::size_t s = 0; s < seasons.size(); ++s) {
    const auto& season = seasons[s];
    std::vector<int> years;
    for (int y = from; y <= year_of(data.end()) + 1; ++y) {
      if (data.index_of(season.first_day(y)) > 0 && data.index_of(season.last_day(y)) >= 0) years.push_back(y);
    }
    if (years.size() < 3) throw DataError("too few " + season.label + " seasons to forecast from " + std::to_string(from));

    forecast::ForecastOptions options;
    options.threads = std::max(1u, cfg.threads);
    const auto set = forecast::seasonal_forecast(config, data, season, years, cfg.members, cfg.seed * 4 + s, options);
    files.push_back(dir / ("forecast_" + season.label + ".csv"));
    {
      auto out = open_out(files.back());
      forecast::write_forecast_csv(set, out);
    }
    const auto sk = forecast::skill(set);
    const auto linear = forecast::optimize_baseline(data, season, years, forecast::BaselineKind::linear,
                                                    forecast::default_grid(forecast::BaselineKind::linear));
    const auto expo = forecast::optimize_baseline(data, season, years, forecast::BaselineKind::exponential,
                                                  forecast::default_grid(forecast::BaselineKind::exponential));
    const std::string& L = season.label;
    report << L << ".years = " << sk.years << '\n'
           << L << ".correlation = " << format_double(sk.correlation) << '\n'
           << L << ".coverage = " << format_double(sk.coverage) << '\n'
           << L << ".baseline.linear.K = " << format_double(linear.best_parameter) << '\n'
           << L << ".baseline.linear.correlation = " << format_double(linear.best_correlation) << '\n'
           << L << ".baseline.exponential.alpha = " << format_double(expo.best_parameter) << '\n'
           << L << ".baseline.exponential.correlation = " << format_double(expo.best_correlation) << '\n';

    files.push_back(dir / ("baselines_" + L + ".csv"));
    {
      auto out = open_out(files.back());
      out << "kind,parameter,correlation\n";
      for (const auto* scan : {&linear, &expo}) {
        for (std::size_t i = 0; i < scan->grid.size(); ++i) {
          out << forecast::to_string(scan->kind) << ',' << format_double(scan->grid[i]) << ','
              << format_double(scan->correlations[i]) << '\n';
        }
      }
    }

    const auto points = forecast::to_points(set);
    std::vector<forecast::WindowSkill> windows;
    if (static_cast<int>(years.size()) >= cfg.window && cfg.window >= 3) {
      windows = forecast::moving_window_skill(points, cfg.window);
      files.push_back(dir / ("window_" + L + ".csv"));
      auto out = open_out(files.back());
      out << "label_year,correlation\n";
      for (const auto& w : windows) out << w.label_year << ',' << format_double(w.correlation) << '\n';
    }

    if (external && season.label == cfg.external_season) {
      const auto combo = forecast::recalibrate_and_combine({points, linear.forecasts, expo.forecasts, *external});
      report << L << ".combination.years = " << combo.years.size() << '\n';
      for (const auto& r : combo.sets) {
        report << L << ".recalibrated." << r.label << ".raw_correlation = " << format_double(r.raw_correlation) << '\n'
               << L << ".recalibrated." << r.label << ".intercept = " << format_double(r.intercept) << '\n'
               << L << ".recalibrated." << r.label << ".slope = " << format_double(r.slope) << '\n';
      }
      std::string used, dropped;
      for (const auto& u : combo.used) used += (used.empty() ? "" : " ") + u;
      for (const auto& d : combo.dropped) dropped += (dropped.empty() ? "" : " ") + d;
      report << L << ".combination.used = " << used << '\n'
             << L << ".combination.dropped = " << dropped << '\n'
             << L << ".combination.correlation = " << format_double(combo.correlation) << '\n';
    }

    SvgCanvas svg(760, windows.empty() ? 360 : 660);
    std::vector<double> x, obs, mean, lo, hi;
    for (const auto& y : set.years) {
      x.push_back(y.year);
      obs.push_back(y.observed);
      const auto iv = stats::summarize(y.members);
      mean.push_back(iv.mean);
      lo.push_back(iv.lo);
      hi.push_back(iv.hi);
    }
    const auto [y0, y1] = data_range({obs, lo, hi});
    const auto p = svg.panel(70, 40, 640, 250, x.front() - 0.5, x.back() + 0.5, y0, y1,
                             L + " seasonal mean: ensemble 95% range, ensemble mean and observed", "year", "hPa");
    svg.band(p, x, lo, hi, kBlue);
    svg.line(p, x, mean, kBlue, 1.5);
    svg.points(p, x, obs, kRed, 3.0);
    if (!windows.empty()) {
      std::vector<double> wx, wc;
      for (const auto& w : windows) {
        wx.push_back(w.label_year);
        wc.push_back(w.correlation);
      }
      const auto q = svg.panel(70, 360, 640, 230, x.front() - 0.5, x.back() + 0.5, -1.0, 1.0,
                               std::to_string(cfg.window) + "-year moving-window correlation", "year");
      svg.hline(q, 0.0, kGrey, false);
      svg.line(q, wx, wc, kBlue, 1.5);
    }
    files.push_back(dir / ("forecast_" + L + ".svg"));
    svg.save(files.back());
  }
  files.push_back(dir / "skill.txt");
  auto out = open_out(files.back());
  out << report.str();
  return files;
}

// --- simulate --------------------------------------------------------------------

std::vector<fs::path> cmd_simulate(const RunConfig& cfg) {
  const ModelConfig config = load_model(cfg);
  const fs::path dir = prepare_out(cfg);
  if (cfg.days < 2) throw ConfigError("--days must be at least 2");
  if (cfg.paths < 1) throw ConfigError("--paths must be at least 1");
  const Date origin = parse_date(cfg.start);
  const auto fn = config.build(origin);
  const Eigen::VectorXd x0 = config.state_priors().mean;

  std::vector<fs::path> files;
  for (std::size_t m = 0; m < cfg.paths; ++m) {
    Rng rng = make_stream(cfg.seed, m);
    Eigen::MatrixXd states;
    const Eigen::VectorXd y = ssm::simulate_path(fn, x0, 1, cfg.days, rng, cfg.write_states ? &states : nullptr);
    const std::string suffix = cfg.paths == 1 ? "" : "_" + std::to_string(m);
    files.push_back(dir / ("simulated" + suffix + ".csv"));
    write_csv(DailySeries(origin, std::vector<double>(y.data(), y.data() + y.size())), files.back());
    if (cfg.write_states) {
      ssm::TrajectoryEnsemble ens;
      ens.coordinate_names = fn.coordinate_names;
      ens.paths.push_back(std::move(states));
      files.push_back(dir / ("states" + suffix + ".csv"));
      auto out = open_out(files.back());
      ssm::write_trajectories_csv(ens, out);
    }
  }
  return files;
}

}  // namespace climssm::cli

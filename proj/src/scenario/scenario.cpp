#include "costcast/scenario/scenario.hpp"

#include <cmath>

#include "costcast/common/csv.hpp"
#include "costcast/common/errors.hpp"
#include "costcast/common/parallel.hpp"
#include "costcast/common/rng.hpp"

namespace costcast::scenario {

void ScenarioConfig::validate() const {
  if (count < 1) throw ValidationError("scenarios.count: must be at least 1");
  if (!(band >= 0.0 && band < 1.0)) throw ValidationError("scenarios.band: must lie in [0, 1)");
  if (hours < 1) throw ValidationError("scenarios.hours: must be at least 1");
}

std::vector<grid::LoadProfile> generate_scenarios(const grid::LoadProfile& actual, const ScenarioConfig& cfg) {
  cfg.validate();
  if (actual.hours() != cfg.hours)
    throw ValidationError("scenarios.hours: actual profile has " + std::to_string(actual.hours()) + " hours, expected " +
                          std::to_string(cfg.hours));
  Rng rng(cfg.seed);
  std::vector<grid::LoadProfile> out;
  out.reserve(static_cast<std::size_t>(cfg.count));
  for (int s = 0; s < cfg.count; ++s) {
    grid::LoadProfile p = actual;
    for (auto& v : p.system_load) v *= uniform(rng, 1.0 - cfg.band, 1.0 + cfg.band);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

template <class Runner>
std::vector<LossSample> build(const grid::Network& net, const dispatch::ReserveConfig& rc,
                              const grid::LoadProfile& actual, const ScenarioConfig& cfg,
                              const dispatch::DispatchOptions& opts, Runner&& run) {
  const auto forecasts = generate_scenarios(actual, cfg);
  rc.validate(net, actual.hours());
  const auto ideal = dispatch::solve_daed(net, actual, opts);
  const std::size_t nh = actual.hours();
  std::vector<LossSample> samples(forecasts.size() * nh);
  run(forecasts.size(), [&](std::size_t s) {
    const auto f = dispatch::fepc_profile(net, rc, forecasts[s], actual, opts, &ideal);
    for (std::size_t i = 0; i < nh; ++i) {
      auto& out = samples[s * nh + i];
      out.scenario = static_cast<int>(s);
      out.hour = static_cast<int>(i);
      out.fep = (forecasts[s].system_load[i] - actual.system_load[i]) / actual.system_load[i];
      out.fepc = f.fepc(static_cast<Eigen::Index>(i));
      out.shed_flag = f.shed_flag;
    }
  });
  return samples;
}

}  // namespace

std::vector<LossSample> build_loss_dataset(const grid::Network& net, const dispatch::ReserveConfig& rc,
                                           const grid::LoadProfile& actual, const ScenarioConfig& cfg,
                                           const dispatch::DispatchOptions& opts, int jobs) {
  return build(net, rc, actual, cfg, opts,
               [jobs](std::size_t n, auto&& fn) { parallel::for_each_index(n, jobs, fn); });
}

std::vector<LossSample> build_loss_dataset_serial(const grid::Network& net, const dispatch::ReserveConfig& rc,
                                                  const grid::LoadProfile& actual, const ScenarioConfig& cfg,
                                                  const dispatch::DispatchOptions& opts) {
  return build(net, rc, actual, cfg, opts, [](std::size_t n, auto&& fn) { parallel::for_each_index_serial(n, fn); });
}

std::string loss_dataset_to_csv(const std::vector<LossSample>& samples) {
  csv::Writer w({"scenario", "hour", "fep", "fepc", "shed_flag"});
  for (const auto& s : samples)
    w.row({std::to_string(s.scenario), std::to_string(s.hour + 1), csv::format_double(s.fep),
           csv::format_double(s.fepc), s.shed_flag ? "1" : "0"});
  return w.str();
}

std::vector<LossSample> load_loss_dataset(const std::string& path) {
  const auto t = csv::read(path);
  const auto cs = t.column("scenario"), ch = t.column("hour"), cf = t.column("fep"), cc = t.column("fepc"),
             cshed = t.column("shed_flag");
  std::vector<LossSample> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    LossSample s;
    s.scenario = static_cast<int>(csv::parse_int(row[cs], "scenario"));
    s.hour = static_cast<int>(csv::parse_int(row[ch], "hour")) - 1;
    s.fep = csv::parse_double(row[cf], "fep");
    s.fepc = csv::parse_double(row[cc], "fepc");
    s.shed_flag = csv::parse_int(row[cshed], "shed_flag") != 0;
    if (s.hour < 0) throw ParseError(path + ": row " + std::to_string(r + 2) + ": hour must be >= 1");
    out.push_back(s);
  }
  return out;
}

}  // namespace costcast::scenario

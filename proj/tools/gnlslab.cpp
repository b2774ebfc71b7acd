// Batch front end: every subcommand reads a flat key=value config file,
// runs one experiment and emits CSV/JSON artifacts stamped with the config
// hash. Exit codes: 0 success, 1 usage error, 2 verdict failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "gnls/experiments.hpp"

namespace {

using gnls::json;

int cmd_symbols_check(const gnls::KeyValueConfig& cfg, const std::string& out) {
  auto sym = gnls::symbol_from_config(cfg);
  gnls::ConditionSampling sp;
  sp.r_max = cfg.get_double_or("check.r_max", 1024.0);
  sp.points_per_shell = static_cast<int>(cfg.get_int_or("check.points_per_shell", 8));
  sp.directions = static_cast<int>(cfg.get_int_or("check.directions", 64));
  sp.seed = cfg.get_seed();
  auto rep = gnls::check_order_conditions(sym, sp);
  json j;
  j["config_hash"] = cfg.hash();
  j["symbol"] = sym.name;
  j["passed"] = rep.passed;
  j["sample_count"] = rep.sample_count;
  for (const auto& [k, v] : rep.worst_ratio) j["worst_ratio"][k] = v;
  j["violations"] = rep.violating_points.size();
  auto os = gnls::detail::open_output(out, "symbol_report.json", cfg.hash());
  os << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return rep.passed ? 0 : 2;
}

int cmd_atlas_build(const gnls::KeyValueConfig& cfg, const std::string& out) {
  auto atlas = gnls::atlas_from_config(cfg);
  json j;
  j["config_hash"] = cfg.hash();
  j["dim"] = atlas.dirs.dim;
  j["eps_theta"] = atlas.dirs.eps_theta;
  j["n_max"] = atlas.n_max;
  j["directions"] = atlas.dirs.directions.size();
  j["sectors"] = atlas.size();
  j["ball_direction_convention"] = "first direction, listed once";
  json sectors = json::array();
  for (const auto& s : atlas.sectors) {
    json e;
    e["scale"] = s.scale;
    e["scale_exp"] = s.scale_exp;
    e["dir_index"] = s.dir_index;
    json c = json::array();
    for (int a = 0; a < s.center.size(); ++a) c.push_back(s.center[a]);
    e["center"] = c;
    sectors.push_back(e);
  }
  j["sector_list"] = sectors;
  auto os = gnls::detail::open_output(out, "atlas.json", cfg.hash());
  os << j.dump(2) << "\n";
  if (cfg.get_or("atlas.chi_table", "0") == "1") {
    auto csv = gnls::detail::open_output(out, "chi_profile.csv", cfg.hash());
    csv << "u,chi\n";
    double eps = atlas.dirs.eps_theta;
    for (int i = 0; i <= 400; ++i) {
      double u = (1.0 + eps + 0.2) * i / 400.0;
      csv << u << "," << gnls::chi_profile(u, eps) << "\n";
    }
  }
  std::cout << "atlas: " << atlas.size() << " sectors, "
            << atlas.dirs.directions.size() << " directions\n";
  return 0;
}

int cmd_basis_find(const gnls::KeyValueConfig& cfg, const std::string& out) {
  auto sym = gnls::symbol_from_config(cfg);
  auto atlas = gnls::atlas_from_config(cfg);
  auto net = gnls::build_basis_net(atlas.dirs.dim,
                                   cfg.get_double_or("basis.r", 0.1),
                                   cfg.get_seed());
  auto basis = gnls::choose_sector_basis(sym, atlas, net,
                                         static_cast<int>(cfg.get_int_or(
                                             "basis.samples", 60)),
                                         cfg.get_seed());
  json j;
  j["config_hash"] = cfg.hash();
  j["net_members"] = net.members.size();
  j["distinct_frames"] = basis.frames.size();
  j["c_basis"] = basis.c_basis;
  json frames = json::array();
  for (const auto& m : basis.frames) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    frames.push_back(rows);
  }
  j["frames"] = frames;
  json assignment = json::array();
  for (std::size_t i = 0; i < basis.frame_of_sector.size(); ++i) {
    json e;
    e["sector"] = i;
    e["frame"] = basis.frame_of_sector[i];
    e["checked"] = static_cast<bool>(basis.checked[i]);
    assignment.push_back(e);
  }
  j["assignment"] = assignment;
  auto os = gnls::detail::open_output(out, "basis.json", cfg.hash());
  os << j.dump(2) << "\n";
  std::cout << "basis: " << basis.frames.size() << " frames, C_O = "
            << basis.c_basis << "\n";
  return 0;
}

int cmd_randomize(const gnls::KeyValueConfig& cfg, const std::string& out) {
  auto grid = gnls::grid_from_config(cfg);
  gnls::LatticeField f =
      gnls::default_profile(grid, cfg.get_double_or("data.band", 2.0),
                            cfg.get_double_or("data.l2", 1.0), cfg.get_seed());
  gnls::RandomDraw draw{gnls::split_seed(cfg.get_seed(), 77),
                        cfg.get_or("law", "gaussian") == "rademacher"
                            ? gnls::RandomLaw::RademacherPair
                            : gnls::RandomLaw::ComplexGaussian};
  auto fo = gnls::randomize(f, draw);
  gnls::detail::ensure_dir(out);
  std::string path = (std::filesystem::path(out) / "randomized.fld").string();
  gnls::save_field(fo, path);
  json side;
  side["config_hash"] = cfg.hash();
  side["grid"] = {{"dim", grid.dim}, {"points", grid.points}, {"period", grid.period}};
  side["register"] = "frequency";
  side["seed"] = cfg.get_seed();
  side["law"] = cfg.get_or("law", "gaussian");
  auto os = gnls::detail::open_output(out, "randomized.fld.json", cfg.hash());
  os << side.dump(2) << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_evolve(const gnls::KeyValueConfig& cfg, const std::string& out) {
  auto sym = gnls::symbol_from_config(cfg);
  auto grid = gnls::grid_from_config(cfg);
  gnls::TimeGrid tg(0.0, cfg.get_double_or("time.horizon", 1.0),
                    static_cast<int>(cfg.get_int_or("time.samples", 129)));
  auto f = gnls::default_profile(grid, cfg.get_double_or("data.band", 2.0),
                                 cfg.get_double_or("data.l2", 1.0),
                                 cfg.get_seed());
  auto table = gnls::make_symbol_table(grid, sym);
  gnls::SpaceTimeField h(tg, grid, gnls::Register::Frequency);  // free flow
  auto v = gnls::duhamel(f, h, table, 0.0, gnls::Sign::Minus);
  double drift = 0.0;
  for (int i = 0; i < tg.count; ++i)
    drift = std::max(drift, std::abs(gnls::l2_norm(v.at(i)) - gnls::l2_norm(f)));
  json j;
  j["config_hash"] = cfg.hash();
  j["l2_drift"] = drift;
  gnls::detail::ensure_dir(out);
  gnls::save_field(gnls::to_space(v.at(tg.count - 1)),
                   (std::filesystem::path(out) / "evolved.fld").string());
  auto os = gnls::detail::open_output(out, "evolve.json", cfg.hash());
  os << j.dump(2) << "\n";
  std::cout << "L2 drift over the window: " << drift << "\n";
  return drift < 1e-10 ? 0 : 2;
}

int cmd_trees(const gnls::KeyValueConfig& cfg, const std::string& out) {
  auto csv = gnls::detail::open_output(out, "tree_counts.csv", cfg.hash());
  csv << "n,count\n";
  long cap = cfg.get_int_or("trees.max_order", 9);
  for (int n = 1; n <= cap; n += 2)
    csv << n << "," << gnls::enumerate_trees(n).size() << "\n";
  std::cout << "tree counts written\n";
  return 0;
}

int cmd_picard(const gnls::KeyValueConfig& cfg, const std::string& out) {
  auto sym = gnls::symbol_from_config(cfg);
  auto grid = gnls::grid_from_config(cfg);
  gnls::TimeGrid tg(0.0, cfg.get_double_or("time.horizon", 0.1),
                    static_cast<int>(cfg.get_int_or("time.samples", 129)));
  auto v0 = gnls::default_profile(grid, cfg.get_double_or("data.band", 2.0),
                                  cfg.get_double_or("data.l2", 1e-2),
                                  cfg.get_seed());
  auto table = gnls::make_symbol_table(grid, sym);
  gnls::SpaceTimeField zero(tg, grid, gnls::Register::Frequency);
  gnls::Sign sign = cfg.get_or("sign", "minus") == "plus" ? gnls::Sign::Plus
                                                          : gnls::Sign::Minus;
  auto res = gnls::iterate_K(v0, zero, zero, table, 0.0, sign,
                             static_cast<int>(cfg.get_int_or("picard.max_iters", 50)));
  json j;
  j["config_hash"] = cfg.hash();
  j["converged"] = res.converged;
  j["iterations"] = res.iterations;
  j["final_residual"] = res.final_residual;
  j["increments"] = res.history.increments;
  j["ratios"] = res.history.ratios;
  auto os = gnls::detail::open_output(out, "picard.json", cfg.hash());
  os << j.dump(2) << "\n";
  std::cout << (res.converged ? "converged" : "did not converge") << " in "
            << res.iterations << " iterations\n";
  return res.converged ? 0 : 2;
}

int cmd_thresholds(const gnls::KeyValueConfig& cfg, const std::string& out) {
  gnls::run_tables(cfg, out);
  std::cout << "threshold tables written\n";
  return 0;
}

int cmd_slope(const gnls::KeyValueConfig& cfg, const std::string& out, bool maximal) {
  gnls::SlopeReport rep =
      maximal ? gnls::run_maximal_slope(cfg) : gnls::run_smoothing_slope(cfg);
  auto os = gnls::detail::open_output(
      out, maximal ? "slope_maximal.json" : "slope_smoothing.json", cfg.hash());
  os << gnls::slope_report_json(rep, cfg).dump(2) << "\n";
  std::printf("slope %.4f (predicted %.4f, margin %.2f) -> %s\n", rep.slope,
              rep.predicted, rep.margin, rep.verdict ? "pass" : "FAIL");
  return rep.verdict ? 0 : 2;
}

int cmd_tails(const gnls::KeyValueConfig& cfg, const std::string& out) {
  json j = gnls::run_tails(cfg, out);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_solve(const gnls::KeyValueConfig& cfg, const std::string& out) {
  json j = gnls::run_solver(cfg, out);
  std::cout << j.dump(2) << "\n";
  return j["converged"].get<bool>() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gnlslab: sector decompositions, randomized data and Duhamel "
               "expansions for generalized cubic NLS, at desk scale"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  app.add_option("-c,--config", config_path, "key=value config file")->required();
  app.add_option("-o,--out", out_dir, "output directory");

  auto add = [&](const std::string& name, const std::string& desc) {
    return app.add_subcommand(name, desc);
  };
  auto* sc_symbols = add("symbols-check", "verify symbol order conditions");
  auto* sc_atlas = add("atlas-build", "build and export a sector atlas");
  auto* sc_basis = add("basis-find", "select per-sector bases from a net");
  auto* sc_rand = add("randomize", "randomize a profile and save the field");
  auto* sc_evolve = add("evolve", "propagate a field and check unitarity");
  auto* sc_trees = add("trees", "ternary tree counts");
  auto* sc_tails = add("tails", "tail Monte Carlo survival table");
  auto* sc_picard = add("picard", "remainder fixed-point iteration");
  auto* sc_solve = add("solve", "full randomized solve u = z + v");
  auto* sc_thresh = add("thresholds", "threshold tables as CSV");
  auto* sc_smax = add("slope-maximal", "maximal-estimate slope experiment");
  auto* sc_ssmo = add("slope-smoothing", "smoothing-estimate slope experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    gnls::KeyValueConfig cfg = gnls::KeyValueConfig::parse_file(config_path);
    cfg.get_seed();  // seed is mandatory in every config
    if (sc_symbols->parsed()) return cmd_symbols_check(cfg, out_dir);
    if (sc_atlas->parsed()) return cmd_atlas_build(cfg, out_dir);
    if (sc_basis->parsed()) return cmd_basis_find(cfg, out_dir);
    if (sc_rand->parsed()) return cmd_randomize(cfg, out_dir);
    if (sc_evolve->parsed()) return cmd_evolve(cfg, out_dir);
    if (sc_trees->parsed()) return cmd_trees(cfg, out_dir);
    if (sc_tails->parsed()) return cmd_tails(cfg, out_dir);
    if (sc_picard->parsed()) return cmd_picard(cfg, out_dir);
    if (sc_solve->parsed()) return cmd_solve(cfg, out_dir);
    if (sc_thresh->parsed()) return cmd_thresholds(cfg, out_dir);
    if (sc_smax->parsed()) return cmd_slope(cfg, out_dir, true);
    if (sc_ssmo->parsed()) return cmd_slope(cfg, out_dir, false);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

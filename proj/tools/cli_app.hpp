#pragma once

// Command-line front end. run() never exits the process, so tests can drive it
// directly: 0 on success, 1 on invalid input, 2 on numerical failure.

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "macrobell/io.hpp"
#include "macrobell/macrobell.hpp"
#include "macrobell/selftest.hpp"

namespace macrobell::cli {

using nlohmann::json;

inline std::vector<cplx> reference_coeffs() {
  return {2.0 / std::sqrt(10.0), 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(10.0)};
}

inline std::vector<cplx> random_coeffs(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> c(d);
  for (auto& z : c) z = {g(rng), g(rng)};
  return normalized(c);
}

inline json json_arg(const std::string& spec, const std::string& what) {
  if (!spec.empty() && (spec.front() == '[' || spec.front() == '{')) return io::parse_json(spec, what);
  return io::read_json(spec);
}

/// reference (alias paper) | random | inline JSON array | JSON file (array or {"coeffs": [...]}).
inline std::vector<cplx> parse_coeffs(const std::string& spec, std::size_t dim, std::uint64_t seed) {
  if (spec == "reference" || spec == "paper") return reference_coeffs();
  if (spec == "random") return random_coeffs(dim, seed);
  const json j = json_arg(spec, "coefficients");
  return io::complex_vector_from_json(j.is_object() ? j.at("coeffs") : j);
}

inline TwoModeCoeffs parse_two_mode(const std::string& spec, std::size_t dim, std::uint64_t seed) {
  if (spec == "reference" || spec == "paper") return TwoModeCoeffs::diagonal(reference_coeffs());
  if (spec == "random") {
    const auto flat = random_coeffs(dim * dim, seed);
    return {static_cast<int>(dim), flat};
  }
  json j = json_arg(spec, "coefficient matrix");
  if (j.is_object()) j = j.at("coeffs");
  if (!j.is_array() || j.empty()) throw Error(Errc::InvalidArgument, "coefficient matrix must be a non-empty array of rows");
  TwoModeCoeffs m{static_cast<int>(j.size()), {}};
  for (const auto& row : j) {
    const auto r = io::complex_vector_from_json(row);
    if (r.size() != j.size()) throw Error(Errc::InvalidArgument, "coefficient matrix must be square");
    m.c.insert(m.c.end(), r.begin(), r.end());
  }
  return m;
}

/// product | w | dicke:K | equal:d | JSON file. Excitation numbers count from
/// 0 at alpha = 1/2 and from N/2 at alpha = 1.
inline DickeSuperposition parse_state(const std::string& spec, std::int64_t n, AlphaMode mode) {
  if (n < 1) throw Error(Errc::InvalidArgument, "--N must be positive");
  if (mode == AlphaMode::One && n % 2 != 0) throw Error(Errc::InvalidArgument, "alpha = 1 needs an even particle number");
  const std::int64_t base = mode == AlphaMode::One ? n / 2 : 0;
  auto single = [&](std::int64_t k) { return DickeSuperposition::make(n, {1.0}, base + k); };
  if (spec == "product") return single(0);
  if (spec == "w") return single(1);
  try {
    if (spec.rfind("dicke:", 0) == 0) return single(std::stoll(spec.substr(6)));
    if (spec.rfind("equal:", 0) == 0) {
      const auto d = std::stoll(spec.substr(6));
      if (d < 1) throw Error(Errc::InvalidArgument, "equal:d needs d >= 1");
      return DickeSuperposition::make(n, std::vector<cplx>(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d))), base);
    }
  } catch (const std::logic_error&) {
    throw Error(Errc::InvalidArgument, "malformed state '" + spec + "'");
  }
  const json j = io::read_json(spec);
  std::int64_t k_min = 0;
  json coeffs = j;
  if (j.is_object()) {
    for (const auto& [key, _] : j.items()) {
      if (key != "coeffs" && key != "k_min") throw Error(Errc::InvalidArgument, "unknown state key '" + key + "'");
    }
    coeffs = j.at("coeffs");
    if (j.contains("k_min")) k_min = j.at("k_min").get<std::int64_t>();
  }
  return DickeSuperposition::make(n, io::complex_vector_from_json(coeffs), base + k_min);
}

inline AlphaMode parse_alpha(double alpha) {
  if (alpha == 0.5) return AlphaMode::Half;
  if (alpha == 1.0) return AlphaMode::One;
  throw Error(Errc::InvalidArgument, "--alpha must be 0.5 or 1");
}

inline NoiseShape parse_shape(const std::string& s) {
  if (s == "uniform") return NoiseShape::Uniform;
  if (s == "truncated_gaussian") return NoiseShape::TruncatedGaussian;
  throw Error(Errc::InvalidArgument, "--shape must be uniform or truncated_gaussian");
}

/// "lo:hi:count" or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  try {
    if (std::count(spec.begin(), spec.end(), ':') == 2) {
      const auto a = spec.find(':');
      const auto b = spec.find(':', a + 1);
      const double lo = std::stod(spec.substr(0, a));
      const double hi = std::stod(spec.substr(a + 1, b - a - 1));
      const long count = std::stol(spec.substr(b + 1));
      if (count < 1) throw Error(Errc::InvalidArgument, "grid count must be positive");
      return linspace(lo, hi, static_cast<std::size_t>(count));
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  } catch (const std::logic_error&) {
    throw Error(Errc::InvalidArgument, "malformed grid '" + spec + "'");
  }
  if (out.empty()) throw Error(Errc::InvalidArgument, "empty grid");
  return out;
}

inline std::vector<std::int64_t> parse_int_list(const std::string& spec) {
  std::vector<std::int64_t> out;
  std::stringstream ss(spec);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) out.push_back(std::stoll(item));
  } catch (const std::logic_error&) {
    throw Error(Errc::InvalidArgument, "malformed list '" + spec + "'");
  }
  if (out.empty()) throw Error(Errc::InvalidArgument, "empty list");
  return out;
}

struct Output {
  std::string path;
  std::ostream& fallback;

  void write(const std::string& content) const {
    if (path.empty()) {
      fallback << content;
    } else {
      io::write_text_atomic(path, content);
    }
  }
};

/// Limit CDF of X for the convergence checks.
inline std::function<double(double)> limit_cdf(const DickeSuperposition& state, const DerivedParams& params, AlphaMode mode) {
  if (mode == AlphaMode::Half) {
    // |N,k> maps to |k>, so the coefficients are shifted up by the offset.
    const auto k_max = static_cast<int>(state.offset + static_cast<std::int64_t>(state.dimension())) - 1;
    std::vector<cplx> c(static_cast<std::size_t>(k_max + 1), 0.0);
    std::copy(state.coeffs.begin(), state.coeffs.end(), c.begin() + state.offset);
    const auto ls = limit_state_alpha_half(params, c);
    GridCdf cdf(limit_density_alpha_half(ls, default_real_grid(k_max, ls.width, 8001)));
    return [cdf](double x) { return cdf(x); };
  }
  // Only differences k - l enter the rotor law, so the offset drops out.
  const auto ls = limit_state_alpha_one(params, state.coeffs);
  GridCdf cdf(limit_density_alpha_one(ls.coeffs, ls.phi, default_theta_grid(8001)));
  return [cdf](double x) { return rotor_x_cdf(cdf, x); };
}

inline std::string json_text(const json& j) { return j.dump(2) + "\n"; }

inline json error_json(std::string_view code, const std::string& message, std::optional<std::size_t> index, int exit_code) {
  json j{{"error", code}, {"message", message}, {"exit_code", exit_code}};
  if (index) j["index"] = *index;
  return j;
}

/// Expands --config FILE into --key value tokens placed right after the
/// subcommand, so explicit flags (later on the line) take precedence.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    std::size_t erase = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      erase = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      erase = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + erase));
    const json cfg = io::read_json(path);
    if (!cfg.is_object()) throw Error(Errc::InvalidArgument, "config must be a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
      if (value.is_boolean()) {
        if (value.get<bool>()) tokens.push_back("--" + key);
        continue;
      }
      tokens.push_back("--" + key);
      if (value.is_string()) {
        tokens.push_back(value.get<std::string>());
      } else if (value.is_number()) {
        tokens.push_back(value.is_number_float() ? io::fmt(value.get<double>()) : value.dump());
      } else {
        tokens.push_back(value.dump());
      }
    }
    const std::size_t at = args.empty() ? 0 : 1;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
    break;
  }
  return args;
}

inline int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Macroscopic Bell-experiment statistics", "macrobell"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(0, 1);
  app.fallthrough();

  unsigned threads = 0;
  bool selftest_flag = false;
  app.add_option("--threads", threads, "Thread cap (default: MACROBELL_THREADS or all cores)");
  app.add_flag("--selftest", selftest_flag, "Run the embedded invariant suite");

  std::string out_path;
  std::string state_spec, povm_path, coeffs_spec = "reference", shape = "uniform";
  std::int64_t n_particles = 0;
  double alpha = 0.5;
  bool nonlinear = false;
  std::uint64_t seed = 0;
  std::size_t dim = 3;

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", out_path, "Output file (default: stdout)"); };
  auto add_seeded_coeffs = [&](CLI::App* sub) {
    sub->add_option("--coeffs", coeffs_spec, "reference | random | JSON array | JSON file");
    sub->add_option("--seed", seed, "Seed for --coeffs random");
    sub->add_option("--dim", dim, "Dimension for --coeffs random")->check(CLI::Range(1, 16));
  };

  // dist
  auto* dist = app.add_subcommand("dist", "Exact finite-N PMF of X");
  dist->add_option("--state", state_spec, "product | w | dicke:K | equal:d | JSON file")->required();
  dist->add_option("--N", n_particles, "Particle number")->required();
  dist->add_option("--povm", povm_path, "POVM JSON file")->required();
  dist->add_option("--alpha", alpha, "Coarse-graining level (0.5 or 1)");
  dist->add_flag("--nonlinear", nonlinear, "Center by the state's own mean outcome");
  add_out(dist);

  // limit
  std::optional<double> phi_opt, width_opt;
  std::size_t points = 0;
  auto* limit = app.add_subcommand("limit", "Analytic limit density");
  add_seeded_coeffs(limit);
  limit->add_option("--povm", povm_path, "POVM JSON file (sets phase and width)");
  limit->add_option("--alpha", alpha, "Coarse-graining level (0.5 or 1)");
  limit->add_option("--phi", phi_opt, "Phase override");
  limit->add_option("--width", width_opt, "Width override (alpha = 0.5)");
  limit->add_option("--points", points, "Grid points");
  add_out(limit);

  // chsh
  std::string angles_spec;
  bool optimize = false;
  double width_a = 0.0, width_b = 0.0;
  auto* chsh = app.add_subcommand("chsh", "CHSH value of sign-binned measurements");
  add_seeded_coeffs(chsh);
  chsh->add_option("--angles", angles_spec, "JSON [a, a', b, b']");
  chsh->add_flag("--optimize", optimize, "Maximize over the four angles");
  chsh->add_option("--width-a", width_a, "Gaussian width of party A");
  chsh->add_option("--width-b", width_b, "Gaussian width of party B");
  add_out(chsh);

  // local-model
  double phi_a = 0.0, phi_b = 0.0;
  auto* local = app.add_subcommand("local-model", "alpha = 1 quantum joint vs hidden-variable joint");
  add_seeded_coeffs(local);
  local->add_option("--phi-a", phi_a, "Phase of party A");
  local->add_option("--phi-b", phi_b, "Phase of party B");
  local->add_option("--points", points, "Grid points per axis (default 201)");
  add_out(local);

  // noise-sweep
  std::string s_grid = "0:1:11", eps_grid = "0:0.5:6";
  auto* sweep = app.add_subcommand("noise-sweep", "Optimal CHSH over (s, eps)");
  add_seeded_coeffs(sweep);
  sweep->add_option("--s-grid", s_grid, "lo:hi:count or comma list");
  sweep->add_option("--eps-grid", eps_grid, "lo:hi:count or comma list");
  sweep->add_option("--shape", shape, "uniform | truncated_gaussian");
  add_out(sweep);

  // channel
  double loss_p = 1.0, depol = 0.0, dephase = 0.0;
  auto* channel = app.add_subcommand("channel", "Effective limit width and phase under noise");
  channel->add_option("--povm", povm_path, "POVM JSON file")->required();
  channel->add_option("--alpha", alpha, "Coarse-graining level (0.5 or 1)");
  channel->add_option("--loss-p", loss_p, "Detection probability");
  channel->add_option("--depol", depol, "Depolarizing parameter");
  channel->add_option("--dephase", dephase, "Dephasing parameter");
  add_out(channel);

  // sample
  std::size_t n_samples = 10000;
  auto* sample = app.add_subcommand("sample", "Monte Carlo samples of X");
  sample->add_option("--state", state_spec, "product | w | dicke:K | equal:d | JSON file")->required();
  sample->add_option("--N", n_particles, "Particle number")->required();
  sample->add_option("--povm", povm_path, "POVM JSON file")->required();
  sample->add_option("--alpha", alpha, "Coarse-graining level (0.5 or 1)");
  sample->add_option("--samples", n_samples, "Number of samples");
  sample->add_option("--seed", seed, "RNG seed");
  sample->add_option("--out", out_path, "Output CSV (a .json sidecar is written next to it)")->required();

  // converge
  std::string n_list = "50,100,200,400,800";
  bool exact = false;
  auto* converge = app.add_subcommand("converge", "KS distance to the limit law versus N");
  converge->add_option("--state", state_spec, "product | w | dicke:K | equal:d | JSON file")->required();
  converge->add_option("--povm", povm_path, "POVM JSON file")->required();
  converge->add_option("--alpha", alpha, "Coarse-graining level (0.5 or 1)");
  converge->add_option("--N-list", n_list, "Comma-separated particle numbers");
  converge->add_option("--samples", n_samples, "Samples per N");
  converge->add_option("--seed", seed, "RNG seed");
  converge->add_flag("--exact", exact, "Use the exact PMF instead of samples");
  add_out(converge);

  auto* selftest = app.add_subcommand("selftest", "Run the embedded invariant suite");

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) out << sub->help();
      return 0;
    }
    err << error_json("UsageError", e.what(), std::nullopt, 1).dump() << "\n";
    return 1;
  } catch (const Error& e) {
    err << error_json(errc_name(e.code()), e.what(), e.index(), 1).dump() << "\n";
    return 1;
  }

  if (threads == 0) threads = default_thread_count();

  try {
    const Output sink{out_path, out};

    if (selftest_flag || selftest->parsed()) {
      const auto items = run_selftest();
      json report = json::array();
      bool ok = true;
      for (const auto& it : items) {
        report.push_back({{"name", it.name}, {"passed", it.passed}, {"measured", it.measured}, {"tolerance", it.tolerance}});
        ok = ok && it.passed;
      }
      out << json_text({{"passed", ok}, {"checks", report}});
      return ok ? 0 : 2;
    }

    if (dist->parsed()) {
      const auto mode = parse_alpha(alpha);
      const auto povm = io::load_povm(povm_path);
      const auto state = parse_state(state_spec, n_particles, mode);
      auto params = derive_params(povm, mode);
      if (nonlinear) params = nonlinear_params(params, state, povm);
      FiniteOptions opts;
      opts.threads = threads;
      const auto pmf = pmf_finite(state, povm, params, alpha_value(mode), opts);
      sink.write(io::csv({"x", "prob"}, {&pmf.values, &pmf.probs}));
      return 0;
    }

    if (limit->parsed()) {
      const auto mode = parse_alpha(alpha);
      const auto coeffs = parse_coeffs(coeffs_spec, dim, seed);
      std::optional<DerivedParams> params;
      if (!povm_path.empty()) params = derive_params(io::load_povm(povm_path), mode);
      const int k_max = static_cast<int>(coeffs.size()) - 1;
      if (mode == AlphaMode::Half) {
        LimitState st = params ? limit_state_alpha_half(*params, coeffs) : LimitState{coeffs, 0.0, 0.0};
        if (phi_opt) st.phi = *phi_opt;
        if (width_opt) st.width = *width_opt;
        const auto dens = limit_density_alpha_half(st, default_real_grid(k_max, st.width, points ? points : 4001), threads);
        sink.write(io::csv({"x", "density"}, {&dens.grid, &dens.density}));
      } else {
        const double phi = phi_opt ? *phi_opt : (params ? params->phi : 0.0);
        const auto dens = limit_density_alpha_one(normalized(coeffs), phi, default_theta_grid(points ? points : 2001));
        sink.write(io::csv({"theta", "density"}, {&dens.grid, &dens.density}));
      }
      return 0;
    }

    if (chsh->parsed()) {
      const auto coeffs = parse_coeffs(coeffs_spec, dim, seed);
      BellAngles angles;
      double value = 0.0;
      if (optimize || angles_spec.empty()) {
        const auto opt = optimize_chsh(coeffs, width_a, width_b);
        angles = opt.angles;
      } else {
        const json ja = io::parse_json(angles_spec, "--angles");
        if (!ja.is_array() || ja.size() != 4) throw Error(Errc::InvalidArgument, "--angles needs [a, a', b, b']");
        angles = {ja[0].get<double>(), ja[1].get<double>(), ja[2].get<double>(), ja[3].get<double>()};
      }
      const auto res = chsh_detail(BellConfig{coeffs, angles, width_a, width_b});
      value = res.value;
      sink.write(json_text({{"value", value},
                            {"angles", {{"a", angles.a}, {"a_prime", angles.a_prime}, {"b", angles.b}, {"b_prime", angles.b_prime}}},
                            {"correlators",
                             {{"AB", res.correlators[0]}, {"AB_prime", res.correlators[1]}, {"A_prime_B", res.correlators[2]},
                              {"A_prime_B_prime", res.correlators[3]}}}}));
      return 0;
    }

    if (local->parsed()) {
      const auto c = parse_two_mode(coeffs_spec, dim, seed);
      const auto grid = default_theta_grid(points ? points : 201);
      const auto r = local_model_alpha_one(c, phi_a, phi_b, grid, grid);
      std::vector<double> ta, tb;
      for (double x : grid)
        for (double y : grid) {
          ta.push_back(x);
          tb.push_back(y);
        }
      sink.write(io::csv({"theta_a", "theta_b", "quantum", "lhv"}, {&ta, &tb, &r.quantum.density, &r.lhv.density}));
      err << json{{"max_abs_diff", r.max_abs_diff}, {"total_variation", r.total_variation}}.dump() << "\n";
      return 0;
    }

    if (sweep->parsed()) {
      const auto coeffs = parse_coeffs(coeffs_spec, dim, seed);
      const auto res = noisy_chsh_sweep(coeffs, parse_grid(s_grid), parse_grid(eps_grid), parse_shape(shape), threads);
      std::vector<double> s, e, v;
      for (const auto& cell : res.cells) {
        s.push_back(cell.s);
        e.push_back(cell.eps);
        v.push_back(cell.chsh);
      }
      sink.write(io::csv({"s", "eps", "chsh"}, {&s, &e, &v}));
      return 0;
    }

    if (channel->parsed()) {
      const auto mode = parse_alpha(alpha);
      const auto eff = noisy_limit_params(io::load_povm(povm_path), NoiseSpec{loss_p, depol, dephase, 0.0, NoiseShape::Uniform}, mode);
      sink.write(json_text({{"mu", eff.mu}, {"tau", eff.tau}, {"sigma2", eff.sigma2}, {"s2", eff.s2}, {"s", std::sqrt(eff.s2)},
                            {"phi", eff.phi}}));
      return 0;
    }

    if (sample->parsed()) {
      const auto mode = parse_alpha(alpha);
      const auto povm = io::load_povm(povm_path);
      const auto state = parse_state(state_spec, n_particles, mode);
      const auto params = derive_params(povm, mode);
      SamplerOptions opts;
      opts.threads = threads;
      const auto batch = sample_outcomes(state, povm, params, alpha_value(mode), n_samples, seed, opts);
      sink.write(io::csv({"x"}, {&batch.values}));
      io::write_text_atomic(out_path + ".json", json_text({{"seed", batch.seed}, {"N", batch.n_particles}, {"n_samples", batch.n_samples}}));
      return 0;
    }

    if (converge->parsed()) {
      const auto mode = parse_alpha(alpha);
      const auto povm = io::load_povm(povm_path);
      const auto params = derive_params(povm, mode);
      std::vector<double> ns, ks;
      for (std::int64_t n : parse_int_list(n_list)) {
        const auto state = parse_state(state_spec, n, mode);
        const auto cdf = limit_cdf(state, params, mode);
        double d = 0.0;
        if (exact) {
          FiniteOptions opts;
          opts.threads = threads;
          d = ks_distance(pmf_finite(state, povm, params, alpha_value(mode), opts), cdf);
        } else {
          SamplerOptions opts;
          opts.threads = threads;
          d = ks_distance(sample_outcomes(state, povm, params, alpha_value(mode), n_samples, seed, opts).values, cdf);
        }
        ns.push_back(static_cast<double>(n));
        ks.push_back(d);
      }
      sink.write(io::csv({"N", "ks"}, {&ns, &ks}));
      return 0;
    }

    out << app.help();
    return 0;
  } catch (const Error& e) {
    const int code = is_validation_error(e.code()) ? 1 : 2;
    err << error_json(errc_name(e.code()), e.what(), e.index(), code).dump() << "\n";
    return code;
  } catch (const json::exception& e) {
    err << error_json("InvalidArgument", e.what(), std::nullopt, 1).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << error_json("NumericFailure", e.what(), std::nullopt, 2).dump() << "\n";
    return 2;
  }
}

}  // namespace macrobell::cli

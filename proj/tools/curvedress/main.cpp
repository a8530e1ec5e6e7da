// Command-line front end: settle, features, backtest, synth, permtest, rerun.
// Every command writes a RunManifest next to its outputs; `rerun` replays a
// manifest bit-for-bit. Exit codes: 0 ok, 1 usage, 2 data validation,
// 3 insufficient history.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curvedress/backtest.hpp"
#include "curvedress/csv.hpp"
#include "curvedress/curves.hpp"
#include "curvedress/errors.hpp"
#include "curvedress/manifest.hpp"
#include "curvedress/synthmarket.hpp"
#include "curvedress/verification.hpp"
#include "curvedress/version.hpp"
#include "curvedress/volmodel.hpp"

namespace fs = std::filesystem;
using namespace curvedress;

namespace {

std::string abs_path(const std::string& p) {
    return fs::absolute(fs::path(p)).lexically_normal().string();
}

void ensure_writable(const std::vector<fs::path>& outputs, bool force) {
    if (force) return;
    for (const auto& o : outputs) {
        if (fs::exists(o)) {
            throw UsageError("refusing to overwrite " + o.string() + " (pass --force)");
        }
    }
}

Date parse_date_arg(const std::string& s, const char* what) {
    const auto d = Date::parse(s);
    if (!d) throw UsageError(std::string(what) + ": expected YYYY-MM-DD, got \"" + s + "\"");
    return *d;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto end = comma == std::string::npos ? s.size() : comma;
        if (end > pos) out.push_back(s.substr(pos, end - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void apply_overrides(KvMap& kv, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
            throw UsageError("--set expects key=value, got \"" + s + "\"");
        }
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
}

/// --config beats the CURVEDRESS_CONFIG environment variable; neither means
/// built-in defaults.
std::string resolve_config_path(const std::string& flag) {
    if (!flag.empty()) return flag;
    const char* env = std::getenv("CURVEDRESS_CONFIG");
    return env ? std::string(env) : std::string();
}

ModelConfig resolve_model_config(const std::string& config_flag,
                                 const std::vector<std::string>& sets, std::string& path_out,
                                 KvMap& kv_out) {
    path_out = resolve_config_path(config_flag);
    ModelConfig cfg;
    if (!path_out.empty()) cfg = load_model_config(path_out);
    KvMap kv = to_kv(cfg);
    apply_overrides(kv, sets);
    cfg = model_config_from_kv(kv, path_out.empty() ? "--set" : path_out);
    kv_out = to_kv(cfg);
    return cfg;
}

SynthConfig resolve_synth_config(const std::string& config_flag,
                                 const std::vector<std::string>& sets, std::string& path_out,
                                 KvMap& kv_out) {
    path_out = resolve_config_path(config_flag);
    SynthConfig cfg;
    if (!path_out.empty()) cfg = load_synth_config(path_out);
    KvMap kv = to_kv(cfg);
    apply_overrides(kv, sets);
    cfg = synth_config_from_kv(kv, path_out.empty() ? "--set" : path_out);
    kv_out = to_kv(cfg);
    return cfg;
}

// ---------------------------------------------------------------- settle ---

struct SettleOpts {
    std::string curves, out;
    bool allow_range = false;
    bool force = false;
};

void run_settle(const SettleOpts& o) {
    const fs::path out(o.out);
    const fs::path manifest_file(o.out + ".manifest.json");
    ensure_writable({out, manifest_file}, o.force);
    const auto curves = load_curves(o.curves, o.allow_range);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());

    csv::Writer w(out, {"date", "hour", "price_eur", "volume_mwh"});
    long skipped = 0;
    for (const auto& [key, hc] : curves) {
        if (!hc.bid || !hc.ask) {
            std::cerr << "warning: " << key.date.to_string() << " hour " << key.hour
                      << ": missing " << (hc.bid ? "ask" : "bid") << " curve, skipped\n";
            ++skipped;
            continue;
        }
        const auto st = settle(*hc.bid, *hc.ask);
        w.field(key.date).field(key.hour).field(st.price).field(st.volume);
        w.end_row();
    }
    w.close();
    if (skipped > 0) std::cerr << "warning: " << skipped << " hour(s) skipped\n";

    RunManifest m;
    m.command = "settle";
    m.version = kVersion;
    m.inputs = {abs_path(o.curves)};
    m.out_path = abs_path(o.out);
    m.args["allow_price_range"] = o.allow_range ? "1" : "0";
    save_manifest(m, manifest_file);
}

// -------------------------------------------------------------- features ---

struct FeaturesOpts {
    std::string curves, forecasts, out_dir, config;
    std::vector<std::string> sets;
    bool allow_range = false;
    bool force = false;
};

void run_features(const FeaturesOpts& o) {
    const fs::path dir(o.out_dir);
    ensure_writable({dir / "features.csv", dir / "residuals.csv", dir / "diagnostic.csv",
                     dir / "manifest.json"},
                    o.force);
    std::string config_path;
    KvMap config_kv;
    const ModelConfig cfg = resolve_model_config(o.config, o.sets, config_path, config_kv);

    const auto curves = load_curves(o.curves, o.allow_range);
    const auto forecasts = load_forecasts(o.forecasts);
    fs::create_directories(dir);

    csv::Writer fw(dir / "features.csv",
                   {"date", "hour", "delta_plus_mwh", "delta_minus_mwh", "p_hat_eur"});
    std::vector<VolumeResidual> residuals;
    long warned = 0;
    for (const auto& [key, hc] : curves) {
        if (!hc.ask) {
            std::cerr << "warning: " << key.date.to_string() << " hour " << key.hour
                      << ": no ask curve, skipped\n";
            ++warned;
            continue;
        }
        const auto fc = forecasts.find(key);
        if (fc == forecasts.end()) {
            std::cerr << "warning: " << key.date.to_string() << " hour " << key.hour
                      << ": no point forecast, skipped\n";
            ++warned;
            continue;
        }
        const auto feat = delta_features(*hc.ask, fc->second, cfg.m);
        fw.field(key.date).field(key.hour).field(feat.delta_plus).field(feat.delta_minus);
        fw.field(fc->second);
        fw.end_row();
        if (hc.bid) {
            const auto st = settle(*hc.bid, *hc.ask);
            const double v_hat = hc.ask->inverse(fc->second).volume;
            residuals.push_back({key.date, key.hour, v_hat - st.volume, feat.delta_plus,
                                 fc->second});
        }
    }
    fw.close();
    save_residuals(residuals, dir / "residuals.csv");

    const auto diag = knn_diagnostic_curve(residuals, cfg.diagnostic_knn);
    csv::Writer dw(dir / "diagnostic.csv", {"delta_plus_mwh", "mean_e_mwh", "sd_e_mwh"});
    for (const auto& p : diag) {
        dw.field(p.delta_plus).field(p.mean).field(p.sd);
        dw.end_row();
    }
    dw.close();

    RunManifest m;
    m.command = "features";
    m.version = kVersion;
    m.config_path = config_path.empty() ? "" : abs_path(config_path);
    m.config = config_kv;
    m.inputs = {abs_path(o.curves), abs_path(o.forecasts)};
    m.out_path = abs_path(o.out_dir);
    m.args["allow_price_range"] = o.allow_range ? "1" : "0";
    save_manifest(m, dir / "manifest.json");
}

// ----------------------------------------------------------------- synth ---

struct SynthOpts {
    std::string out_dir, config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

void run_synth(const SynthOpts& o) {
    const fs::path dir(o.out_dir);
    ensure_writable({dir / "curves.csv", dir / "observed.csv", dir / "forecasts.csv",
                     dir / "manifest.json"},
                    o.force);
    std::string config_path;
    KvMap config_kv;
    SynthConfig cfg = resolve_synth_config(o.config, o.sets, config_path, config_kv);
    if (o.seed) {
        cfg.seed = *o.seed;
        config_kv = to_kv(cfg);
    }

    const auto ds = generate(cfg);
    write_synth_csvs(ds, dir);

    RunManifest m;
    m.command = "synth";
    m.version = kVersion;
    m.seed = cfg.seed;
    m.config_path = config_path.empty() ? "" : abs_path(config_path);
    m.config = config_kv;
    m.out_path = abs_path(o.out_dir);
    save_manifest(m, dir / "manifest.json");
}

// -------------------------------------------------------------- backtest ---

struct BacktestOpts {
    std::string curves, observed, forecasts, out_dir, config;
    std::string first, last;
    std::string models = "bidask,gaussian,empirical";
    std::string exclude;  // comma-separated ISO dates
    std::vector<std::string> sets;
    std::uint64_t seed = 1;
    int lookback = 7;
    bool allow_range = false;
    bool force = false;
};

void run_backtest_cmd(const BacktestOpts& o) {
    const fs::path dir(o.out_dir);
    std::vector<fs::path> outputs;
    for (const char* f : {"forecasts.csv", "scores.csv", "aggregate.csv", "aggregate_by_hour.csv",
                          "pit.csv", "reliability.csv", "skipped.csv", "manifest.json"}) {
        outputs.push_back(dir / f);
    }
    ensure_writable(outputs, o.force);

    std::string config_path;
    KvMap config_kv;
    BacktestPlan plan;
    plan.config = resolve_model_config(o.config, o.sets, config_path, config_kv);
    plan.first_day = parse_date_arg(o.first, "--first");
    plan.last_day = parse_date_arg(o.last, "--last");
    plan.seed = o.seed;
    plan.curve_lookback_days = o.lookback;
    plan.models.clear();
    for (const auto& name : split_commas(o.models)) {
        const auto id = parse_model(name);
        if (!id) throw UsageError("--models: unknown model \"" + name + "\"");
        plan.models.push_back(*id);
    }
    for (const auto& d : split_commas(o.exclude)) {
        plan.exclude_scoring.push_back(parse_date_arg(d, "--exclude-dates"));
    }

    const auto data =
        load_backtest_dataset(o.curves, o.observed, o.forecasts, o.allow_range);
    const auto result = run_backtest(data, plan);
    write_backtest_outputs(result, dir);
    std::cerr << result.scores.size() << " score row(s), " << result.skipped.size()
              << " skipped cell(s)\n";

    RunManifest m;
    m.command = "backtest";
    m.version = kVersion;
    m.seed = o.seed;
    m.config_path = config_path.empty() ? "" : abs_path(config_path);
    m.config = config_kv;
    m.inputs = {abs_path(o.curves), abs_path(o.observed), abs_path(o.forecasts)};
    m.out_path = abs_path(o.out_dir);
    for (const auto& d : plan.exclude_scoring) m.exclude_dates.push_back(d.to_string());
    m.args["first"] = plan.first_day.to_string();
    m.args["last"] = plan.last_day.to_string();
    m.args["models"] = o.models;
    m.args["lookback"] = std::to_string(o.lookback);
    m.args["allow_price_range"] = o.allow_range ? "1" : "0";
    save_manifest(m, dir / "manifest.json");
}

// -------------------------------------------------------------- permtest ---

struct PermtestOpts {
    std::string scores, model_a, model_b;
    std::string metric = "crps";
    std::string out;  // optional result file
    int resamples = 10000;
    std::uint64_t seed = 1;
    bool force = false;
};

void run_permtest(const PermtestOpts& o) {
    const auto a = parse_model(o.model_a);
    if (!a) throw UsageError("--model-a: unknown model \"" + o.model_a + "\"");
    const auto b = parse_model(o.model_b);
    if (!b) throw UsageError("--model-b: unknown model \"" + o.model_b + "\"");
    const auto metric = parse_metric(o.metric);
    if (!metric) throw UsageError("--metric: expected crps, qs10, or qs90");
    if (!o.out.empty()) {
        ensure_writable({fs::path(o.out), fs::path(o.out + ".manifest.json")}, o.force);
    }

    const auto scores = load_scores(o.scores);
    const auto pairs = pair_scores(scores, *a, *b, *metric);
    const auto res = permutation_test(pairs.a, pairs.b, o.resamples, o.seed);

    std::string report;
    report += "model_a=" + std::string(model_name(*a)) + "\n";
    report += "model_b=" + std::string(model_name(*b)) + "\n";
    report += "metric=" + std::string(metric_name(*metric)) + "\n";
    report += "n_pairs=" + std::to_string(pairs.a.size()) + "\n";
    report += "resamples=" + std::to_string(res.resamples) + "\n";
    report += "observed=" + csv::format_double(res.observed) + "\n";
    report += "q025=" + csv::format_double(res.q025) + "\n";
    report += "q975=" + csv::format_double(res.q975) + "\n";
    report += "p_value=" + csv::format_double(res.p_value) + "\n";
    std::cout << report;

    if (!o.out.empty()) {
        const fs::path out(o.out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        std::ofstream f(out);
        if (!f) throw ValidationError("cannot write " + o.out);
        f << report;
        if (!f.flush()) throw ValidationError("write failure on " + o.out);

        RunManifest m;
        m.command = "permtest";
        m.version = kVersion;
        m.seed = o.seed;
        m.inputs = {abs_path(o.scores)};
        m.out_path = abs_path(o.out);
        m.args["model_a"] = model_name(*a);
        m.args["model_b"] = model_name(*b);
        m.args["metric"] = metric_name(*metric);
        m.args["resamples"] = std::to_string(o.resamples);
        save_manifest(m, o.out + ".manifest.json");
    }
}

// ----------------------------------------------------------------- rerun ---

std::string arg_or(const RunManifest& m, const std::string& key, const std::string& fallback) {
    const auto it = m.args.find(key);
    return it == m.args.end() ? fallback : it->second;
}

void run_rerun(const std::string& manifest_path, const std::string& out_override, bool force) {
    const RunManifest m = load_manifest(manifest_path);
    if (m.version != kVersion) {
        std::cerr << "warning: manifest written by version " << m.version << ", this is "
                  << kVersion << "\n";
    }
    const std::string out = out_override.empty() ? m.out_path : out_override;
    auto input = [&](std::size_t i) -> const std::string& {
        if (i >= m.inputs.size()) {
            throw ValidationError("manifest: command " + m.command + " expects at least " +
                                  std::to_string(i + 1) + " input(s)");
        }
        return m.inputs[i];
    };

    if (m.command == "settle") {
        SettleOpts o;
        o.curves = input(0);
        o.out = out;
        o.allow_range = arg_or(m, "allow_price_range", "0") == "1";
        o.force = force;
        run_settle(o);
    } else if (m.command == "features") {
        FeaturesOpts o;
        o.curves = input(0);
        o.forecasts = input(1);
        o.out_dir = out;
        o.allow_range = arg_or(m, "allow_price_range", "0") == "1";
        o.force = force;
        for (const auto& [k, v] : m.config) o.sets.push_back(k + "=" + v);
        run_features(o);
    } else if (m.command == "synth") {
        SynthOpts o;
        o.out_dir = out;
        o.force = force;
        for (const auto& [k, v] : m.config) o.sets.push_back(k + "=" + v);
        run_synth(o);
    } else if (m.command == "backtest") {
        BacktestOpts o;
        o.curves = input(0);
        o.observed = input(1);
        o.forecasts = input(2);
        o.out_dir = out;
        o.first = arg_or(m, "first", "");
        o.last = arg_or(m, "last", "");
        o.models = arg_or(m, "models", "bidask,gaussian,empirical");
        o.lookback = std::stoi(arg_or(m, "lookback", "7"));
        o.allow_range = arg_or(m, "allow_price_range", "0") == "1";
        o.seed = m.seed;
        o.force = force;
        for (const auto& [k, v] : m.config) o.sets.push_back(k + "=" + v);
        std::string excl;
        for (const auto& d : m.exclude_dates) {
            if (!excl.empty()) excl += ",";
            excl += d;
        }
        o.exclude = excl;
        run_backtest_cmd(o);
    } else if (m.command == "permtest") {
        PermtestOpts o;
        o.scores = input(0);
        o.out = out_override.empty() ? m.out_path : out_override;
        o.model_a = arg_or(m, "model_a", "");
        o.model_b = arg_or(m, "model_b", "");
        o.metric = arg_or(m, "metric", "crps");
        o.resamples = std::stoi(arg_or(m, "resamples", "10000"));
        o.seed = m.seed;
        o.force = force;
        run_permtest(o);
    } else {
        throw ValidationError("manifest: unknown command \"" + m.command + "\"");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive price distributions from bid/ask curve dressing"};
    app.set_version_flag("--version", kVersionString);
    app.require_subcommand(1);

    SettleOpts settle_opts;
    auto* settle_cmd = app.add_subcommand("settle", "Intersect bid/ask curves hour by hour");
    settle_cmd->add_option("--curves", settle_opts.curves, "curve CSV")->required();
    settle_cmd->add_option("--out", settle_opts.out, "output CSV")->required();
    settle_cmd->add_flag("--allow-price-range", settle_opts.allow_range,
                         "accept prices outside the exchange codomain");
    settle_cmd->add_flag("--force", settle_opts.force, "overwrite existing outputs");

    FeaturesOpts feat_opts;
    auto* feat_cmd =
        app.add_subcommand("features", "Kink features, residuals, and the moving-window diagnostic");
    feat_cmd->add_option("--curves", feat_opts.curves, "curve CSV")->required();
    feat_cmd->add_option("--forecasts", feat_opts.forecasts, "point forecast CSV")->required();
    feat_cmd->add_option("--out", feat_opts.out_dir, "output directory")->required();
    feat_cmd->add_option("--config", feat_opts.config,
                         "model config file (default $CURVEDRESS_CONFIG)");
    feat_cmd->add_option("--set", feat_opts.sets, "override a config key, key=value");
    feat_cmd->add_flag("--allow-price-range", feat_opts.allow_range,
                       "accept prices outside the exchange codomain");
    feat_cmd->add_flag("--force", feat_opts.force, "overwrite existing outputs");

    SynthOpts synth_opts;
    std::uint64_t synth_seed = 0;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic market");
    synth_cmd->add_option("--out", synth_opts.out_dir, "output directory")->required();
    synth_cmd->add_option("--config", synth_opts.config,
                          "synth config file (default $CURVEDRESS_CONFIG)");
    synth_cmd->add_option("--set", synth_opts.sets, "override a config key, key=value");
    auto* synth_seed_opt =
        synth_cmd->add_option("--seed", synth_seed, "override the config seed");
    synth_cmd->add_flag("--force", synth_opts.force, "overwrite existing outputs");

    BacktestOpts bt_opts;
    auto* bt_cmd = app.add_subcommand("backtest", "Rolling out-of-sample evaluation");
    bt_cmd->add_option("--curves", bt_opts.curves, "curve CSV")->required();
    bt_cmd->add_option("--observed", bt_opts.observed, "realized price/volume CSV")->required();
    bt_cmd->add_option("--forecasts", bt_opts.forecasts, "point forecast CSV")->required();
    bt_cmd->add_option("--first", bt_opts.first, "first forecast day, YYYY-MM-DD")->required();
    bt_cmd->add_option("--last", bt_opts.last, "last forecast day, YYYY-MM-DD")->required();
    bt_cmd->add_option("--out", bt_opts.out_dir, "output directory")->required();
    bt_cmd->add_option("--config", bt_opts.config,
                       "model config file (default $CURVEDRESS_CONFIG)");
    bt_cmd->add_option("--set", bt_opts.sets, "override a config key, key=value");
    bt_cmd->add_option("--seed", bt_opts.seed, "PIT randomization seed (default 1)");
    bt_cmd->add_option("--models", bt_opts.models,
                       "comma list of bidask,gaussian,empirical (default all)");
    bt_cmd->add_option("--exclude-dates", bt_opts.exclude,
                       "comma list of dates to drop from scoring");
    bt_cmd->add_option("--lookback", bt_opts.lookback,
                       "days to search back for a prior curve (default 7)");
    bt_cmd->add_flag("--allow-price-range", bt_opts.allow_range,
                     "accept prices outside the exchange codomain");
    bt_cmd->add_flag("--force", bt_opts.force, "overwrite existing outputs");

    PermtestOpts pt_opts;
    auto* pt_cmd = app.add_subcommand("permtest", "Paired permutation test on backtest scores");
    pt_cmd->add_option("--scores", pt_opts.scores, "scores.csv from a backtest")->required();
    pt_cmd->add_option("--model-a", pt_opts.model_a, "first model")->required();
    pt_cmd->add_option("--model-b", pt_opts.model_b, "second model")->required();
    pt_cmd->add_option("--metric", pt_opts.metric, "crps, qs10, or qs90 (default crps)");
    pt_cmd->add_option("--resamples", pt_opts.resamples, "number of resamples (default 10000)");
    pt_cmd->add_option("--seed", pt_opts.seed, "resampling seed (default 1)");
    pt_cmd->add_option("--out", pt_opts.out, "also write the report to this file");
    pt_cmd->add_flag("--force", pt_opts.force, "overwrite existing outputs");

    std::string rerun_manifest, rerun_out;
    bool rerun_force = false;
    auto* rerun_cmd = app.add_subcommand("rerun", "Replay a run from its manifest");
    rerun_cmd->add_option("--manifest", rerun_manifest, "manifest JSON file")->required();
    rerun_cmd->add_option("--out", rerun_out, "redirect outputs to this path");
    rerun_cmd->add_flag("--force", rerun_force, "overwrite existing outputs");

    try {
        app.parse(argc, argv);
        if (synth_seed_opt->count() > 0) synth_opts.seed = synth_seed;

        if (settle_cmd->parsed()) run_settle(settle_opts);
        else if (feat_cmd->parsed()) run_features(feat_opts);
        else if (synth_cmd->parsed()) run_synth(synth_opts);
        else if (bt_cmd->parsed()) run_backtest_cmd(bt_opts);
        else if (pt_cmd->parsed()) run_permtest(pt_opts);
        else if (rerun_cmd->parsed()) run_rerun(rerun_manifest, rerun_out, rerun_force);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InsufficientHistoryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

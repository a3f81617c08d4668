#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <unordered_map>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "skinstack/csv.hpp"
#include "skinstack/dataset.hpp"
#include "skinstack/errors.hpp"
#include "skinstack/fusion.hpp"
#include "skinstack/metrics.hpp"
#include "skinstack/stacker.hpp"
#include "skinstack/synth.hpp"

namespace fs = std::filesystem;

namespace skinstack::cli {

namespace {

const std::vector<std::string> kBackboneNames = {"mobilenet_v2", "resnet18", "vgg11"};

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

// Resolved value of every option of a subcommand, explicit or default.
std::map<std::string, std::string> resolved_config(const CLI::App& sub) {
    std::map<std::string, std::string> config;
    for (const auto* opt : sub.get_options()) {
        const auto name = opt->get_name();
        if (name == "--help" || name == "-h" || name.empty()) continue;
        auto key = opt->get_lnames().empty() ? name : opt->get_lnames().front();
        if (opt->count() > 0)
            config[key] = join(opt->results(), ",");
        else
            config[key] = opt->get_default_str();
    }
    return config;
}

struct Context {
    std::string command;
    std::vector<std::string> args;
    const CLI::App* sub = nullptr;
    std::ostream& out;
    std::ostream& err;

    void finish(const fs::path& manifest_path, const std::vector<fs::path>& inputs,
                const std::vector<fs::path>& outputs, const std::string& seed) const {
        RunManifest m;
        m.command = command;
        m.args = args;
        m.config = resolved_config(*sub);
        for (const auto& p : inputs) m.input_digests[p.string()] = sha256_file(p);
        for (const auto& p : outputs) m.output_digests[p.string()] = sha256_file(p);
        m.seed = seed;
        m.timestamp = utc_timestamp();
        write_manifest(m, manifest_path);
    }

    void warn(const std::vector<std::string>& warnings) const {
        for (const auto& w : warnings) err << "warning: " << w << "\n";
    }
};

fs::path manifest_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

std::vector<LogitTable> load_tables(const std::vector<std::string>& paths) {
    std::vector<LogitTable> tables;
    for (const auto& p : paths) tables.push_back(load_logits(p));
    return tables;
}

std::unordered_map<std::string, int> label_map(const std::vector<MetadataRecord>& records) {
    std::unordered_map<std::string, int> labels;
    for (const auto& r : records) labels.emplace(r.sample_id, class_index(r.label));
    return labels;
}

std::vector<int> labels_for(const std::unordered_map<std::string, int>& labels, const std::vector<std::string>& ids) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = labels.find(id);
        if (it == labels.end()) throw ValidationError("sample id '" + id + "' has no label in the metadata");
        out.push_back(it->second);
    }
    return out;
}

// Sample ids to process: the first table's order, optionally restricted to
// one split. Ids of the split that the first table lacks are reported.
std::vector<std::string> select_ids(const LogitTable& first, const std::string& split_file, const std::string& subset) {
    if (split_file.empty() || subset == "all") return first.ids();
    const auto wanted = parse_split(subset);
    if (!wanted) throw ValidationError("unknown subset '" + subset + "'");
    const auto splits = load_split(split_file);
    std::vector<std::string> ids;
    for (const auto& id : first.ids()) {
        const auto it = splits.find(id);
        if (it != splits.end() && it->second == *wanted) ids.push_back(id);
    }
    std::size_t expected = 0;
    for (const auto& [id, s] : splits)
        if (s == *wanted) ++expected;
    if (ids.size() != expected) {
        std::vector<std::string> missing;
        for (const auto& [id, s] : splits)
            if (s == *wanted && !first.contains(id)) missing.push_back(id);
        std::sort(missing.begin(), missing.end());
        throw ValidationError("sample id '" + missing.front() + "' missing from model 1 (" + first.model_id() + ")");
    }
    return ids;
}

std::array<double, 3> to_ratios(const std::vector<double>& r) {
    if (r.size() != 3) throw ValidationError("--ratios needs exactly three values");
    return {r[0], r[1], r[2]};
}

// ---------------------------------------------------------------------------

struct DedupArgs {
    std::string in;
    std::string out;
    MetadataColumns columns;
};

int cmd_dedup(const DedupArgs& a, const Context& ctx) {
    const auto records = load_metadata(a.in, a.columns);
    const auto kept = dedup_by_group(records);
    write_metadata(kept, a.out);

    ctx.out << "deduplicated: " << records.size() << " → " << kept.size() << "\n";
    const auto counts = class_counts(kept);
    for (std::size_t c = 0; c < kNumClasses; ++c) ctx.out << "  " << kLesionCodes[c] << "\t" << counts[c] << "\n";
    ctx.finish(manifest_for(a.out), {a.in}, {a.out}, "");
    return kSuccess;
}

struct SplitArgs {
    std::string metadata;
    std::vector<double> ratios = {0.70, 0.15, 0.15};
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_split(const SplitArgs& a, const Context& ctx) {
    const auto ratios = to_ratios(a.ratios);
    const auto records = load_metadata(a.metadata);
    const auto assignment = stratified_split(records, ratios, a.seed);
    ctx.warn(assignment.warnings);
    write_split(assignment, a.out);
    const auto n = assignment.sizes();
    ctx.out << "train " << n[0] << ", val " << n[1] << ", test " << n[2] << "\n";
    ctx.finish(manifest_for(a.out), {a.metadata}, {a.out}, std::to_string(a.seed));
    return kSuccess;
}

struct FuseArgs {
    std::vector<std::string> logits;
    std::string mode = "avg";
    std::vector<double> weights = {1.2, 1.2, 1.0};
    std::string split;
    std::string subset = "test";
    std::string out;
};

int cmd_fuse(const FuseArgs& a, const Context& ctx) {
    const auto mode = parse_fusion_mode(a.mode);
    if (!mode) throw ValidationError("unknown fusion mode '" + a.mode + "'");
    const EnsembleWeights weights(a.weights);
    const auto tables = load_tables(a.logits);
    const auto ids = select_ids(tables.front(), a.split, a.subset);
    const auto aligned = align(tables, ids);
    const auto fused = fuse_rows(aligned.views, *mode, weights);

    if (*mode == FusionMode::WeightedConcat) {
        std::string text = "sample_id";
        for (std::size_t j = 0; j < fused.cols(); ++j) text += ",f" + std::to_string(j);
        text += '\n';
        for (std::size_t i = 0; i < ids.size(); ++i) {
            text += ids[i];
            for (double v : fused.row(i)) text += "," + csv::format_double(v);
            text += '\n';
        }
        csv::write_file(a.out, text);
    } else {
        LogitTable table(std::string(fusion_mode_name(*mode)));
        for (std::size_t i = 0; i < ids.size(); ++i) table.add(ids[i], fused.row(i));
        write_logits(table, a.out);
    }
    ctx.out << "fused " << ids.size() << " samples from " << tables.size() << " models (" << a.mode << ")\n";

    std::vector<fs::path> inputs(a.logits.begin(), a.logits.end());
    if (!a.split.empty()) inputs.emplace_back(a.split);
    ctx.finish(manifest_for(a.out), inputs, {a.out}, "");
    return kSuccess;
}

struct TrainArgs {
    std::vector<std::string> logits;
    std::string metadata;
    std::string split;
    TrainConfig config;
    std::vector<double> weights = {1.2, 1.2, 1.0};
    std::string params_out;
    std::string history_out;
};

int cmd_train_stack(TrainArgs a, const Context& ctx) {
    a.config.weights = EnsembleWeights(a.weights);
    const auto tables = load_tables(a.logits);
    if (a.config.weights.size() != tables.size())
        throw ValidationError("got " + std::to_string(a.config.weights.size()) + " weights for " +
                              std::to_string(tables.size()) + " models");
    const auto labels = label_map(load_metadata(a.metadata));
    const auto train_ids = select_ids(tables.front(), a.split, "train");
    const auto val_ids = select_ids(tables.front(), a.split, "val");

    const auto train_views = align(tables, train_ids).views;
    const auto val_views = align(tables, val_ids).views;
    const auto x_train = fuse_rows(train_views, FusionMode::WeightedConcat, a.config.weights);
    const auto x_val = fuse_rows(val_views, FusionMode::WeightedConcat, a.config.weights);
    const auto y_train = labels_for(labels, train_ids);
    const auto y_val = labels_for(labels, val_ids);

    const auto result = train(x_train, y_train, x_val, y_val, a.config, kNumClasses);
    write_params(result.params, tables.size(), a.params_out);
    csv::write_file(a.history_out, history_csv(result.history));

    const auto& best = result.history.epochs[static_cast<std::size_t>(result.history.best_epoch - 1)];
    ctx.out << "epochs run " << result.history.epochs.size() << ", best epoch " << result.history.best_epoch
            << " (val acc " << csv::format_double(best.val_accuracy) << ")"
            << (result.history.stopped_early ? ", stopped early" : "") << "\n";

    std::vector<fs::path> inputs(a.logits.begin(), a.logits.end());
    inputs.emplace_back(a.metadata);
    inputs.emplace_back(a.split);
    ctx.finish(manifest_for(a.params_out), inputs, {a.params_out, a.history_out}, std::to_string(a.config.seed));
    return kSuccess;
}

struct EvalArgs {
    std::vector<std::string> logits;
    std::string metadata;
    std::string split;
    std::string subset = "test";
    std::string mode = "single";
    std::string params;
    std::vector<double> weights = {1.2, 1.2, 1.0};
    std::string name;
    std::string auc = "weighted";
    std::string report_out;
    std::string confusion_out;
};

std::string confusion_csv(const Matrix& logits, const std::vector<int>& labels) {
    std::vector<int> preds(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) preds[i] = static_cast<int>(predict_argmax(logits.row(i)));
    const auto cm = confusion(preds, labels, kNumClasses);
    std::string out = "true\\pred";
    for (auto code : kLesionCodes) out += "," + std::string(code);
    out += '\n';
    for (std::size_t t = 0; t < kNumClasses; ++t) {
        out += kLesionCodes[t];
        for (std::size_t p = 0; p < kNumClasses; ++p) out += "," + std::to_string(cm(t, p));
        out += '\n';
    }
    return out;
}

int cmd_eval(const EvalArgs& a, const Context& ctx) {
    const std::vector<std::string> modes = {"single", "max", "avg", "stack", "all"};
    if (std::find(modes.begin(), modes.end(), a.mode) == modes.end())
        throw ValidationError("unknown eval mode '" + a.mode + "'");
    AucAverage average;
    if (a.auc == "weighted")
        average = AucAverage::Weighted;
    else if (a.auc == "macro")
        average = AucAverage::Macro;
    else
        throw ValidationError("--auc must be 'weighted' or 'macro'");
    if (a.mode == "single" && a.logits.size() != 1) throw ValidationError("--mode single takes exactly one logit file");
    if (a.mode == "stack" && a.params.empty()) throw ValidationError("--mode stack requires --params");

    const EnsembleWeights weights(a.weights);
    const auto tables = load_tables(a.logits);
    const auto ids = select_ids(tables.front(), a.split, a.subset);
    const auto labels = labels_for(label_map(load_metadata(a.metadata)), ids);
    const auto aligned = align(tables, ids);

    std::vector<std::pair<std::string, Matrix>> rows;
    auto named = [&](const std::string& fallback) { return a.name.empty() ? fallback : a.name; };
    auto stacked = [&]() {
        std::size_t models = 0;
        const auto params = load_params(a.params, &models);
        if (models != tables.size())
            throw ValidationError("parameter file expects " + std::to_string(models) + " models, got " +
                                  std::to_string(tables.size()));
        if (weights.size() != tables.size()) throw ValidationError("weight count does not match model count");
        const auto x = fuse_rows(aligned.views, FusionMode::WeightedConcat, weights);
        Matrix out(x.rows(), params.classes());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto z = forward(params, x.row(i));
            std::copy(z.begin(), z.end(), out.row(i).begin());
        }
        return out;
    };

    if (a.mode == "single") rows.emplace_back(named(tables.front().model_id()), aligned.views.front());
    if (a.mode == "all")
        for (std::size_t m = 0; m < tables.size(); ++m) rows.emplace_back(tables[m].model_id(), aligned.views[m]);
    if (a.mode == "max") rows.emplace_back(named("Max Voting"), fuse_rows(aligned.views, FusionMode::MaxVoting));
    if (a.mode == "avg") rows.emplace_back(named("Average Voting"), fuse_rows(aligned.views, FusionMode::AverageVoting));
    if (a.mode == "all") {
        rows.emplace_back("Max Voting", fuse_rows(aligned.views, FusionMode::MaxVoting));
        rows.emplace_back("Average Voting", fuse_rows(aligned.views, FusionMode::AverageVoting));
    }
    if (a.mode == "stack" || (a.mode == "all" && !a.params.empty())) rows.emplace_back(named("Stacking"), stacked());
    if (a.mode == "all" && !a.name.empty()) rows.back().first = a.name;

    std::vector<NamedReport> reports;
    std::vector<std::string> warnings;
    for (const auto& [name, logits] : rows) reports.push_back({name, full_report(logits, labels, average, &warnings)});
    std::sort(warnings.begin(), warnings.end());
    warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
    ctx.warn(warnings);

    const auto markdown = report_markdown(reports);
    ctx.out << markdown;
    const bool as_csv = fs::path(a.report_out).extension() == ".csv";
    csv::write_file(a.report_out, as_csv ? report_csv(reports) : markdown);

    std::vector<fs::path> outputs = {a.report_out};
    if (!a.confusion_out.empty()) {
        csv::write_file(a.confusion_out, confusion_csv(rows.back().second, labels));
        outputs.emplace_back(a.confusion_out);
    }
    std::vector<fs::path> inputs(a.logits.begin(), a.logits.end());
    inputs.emplace_back(a.metadata);
    if (!a.split.empty()) inputs.emplace_back(a.split);
    if (!a.params.empty()) inputs.emplace_back(a.params);
    ctx.finish(manifest_for(a.report_out), inputs, outputs, "");
    return kSuccess;
}

struct SimulateArgs {
    std::string preset = "none";
    SynthConfig config;
    std::vector<double> priors;
    double target_accuracy = 0.0;
    std::size_t n_probe = 20000;
    std::string outdir;
};

int cmd_simulate(SimulateArgs a, const Context& ctx) {
    auto given = [&](const std::string& flag) { return ctx.sub->get_option(flag)->count() > 0; };
    std::vector<std::string> names;
    if (a.preset == "ham-like") {
        if (!given("--sigma")) a.config.sigma = 1.0;
        if (!given("--rho")) a.config.rho = 0.5;
        if (!given("--n-models")) a.config.n_models = 3;
        if (!given("--target-accuracy")) a.target_accuracy = 0.80;
        if (a.config.n_models == kBackboneNames.size()) names = kBackboneNames;
    } else if (a.preset != "none") {
        throw ValidationError("unknown preset '" + a.preset + "'");
    }
    if (!a.priors.empty()) {
        if (a.priors.size() != kNumClasses) throw ValidationError("--priors needs 7 values");
        std::copy(a.priors.begin(), a.priors.end(), a.config.class_priors.begin());
    }
    a.config.validate();
    if (a.target_accuracy > 0.0) {
        SynthConfig probe = a.config;
        probe.seed = a.config.seed ^ 0x9E3779B97F4A7C15ULL;
        a.config.mu = calibrate_mu(a.target_accuracy, probe, a.n_probe);
        ctx.out << "calibrated mu = " << csv::format_double(a.config.mu) << " for target accuracy "
                << csv::format_double(a.target_accuracy) << "\n";
    }
    if (names.empty())
        for (std::size_t m = 0; m < a.config.n_models; ++m) names.push_back("model_" + std::to_string(m + 1));

    const auto data = gen_dataset(a.config);
    const fs::path dir(a.outdir);
    fs::create_directories(dir);
    std::vector<fs::path> outputs;
    write_metadata(data.metadata(), dir / "metadata.csv");
    outputs.push_back(dir / "metadata.csv");
    for (std::size_t m = 0; m < data.tables.size(); ++m) {
        const auto path = dir / (names[m] + ".csv");
        write_logits(data.tables[m], path);
        outputs.push_back(path);
        ctx.out << names[m] << ": accuracy " << csv::format_double(model_accuracy(data.tables[m], data.ids, data.labels))
                << "\n";
    }
    ctx.finish(dir / "manifest.json", {}, outputs, std::to_string(a.config.seed));
    return kSuccess;
}

int cmd_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    const auto recorded = read_manifest(manifest_path);
    if (recorded.args.empty() || recorded.args.front() == "replay")
        throw ValidationError("manifest does not record a replayable command");
    const int code = run(recorded.args, out, err);
    if (code != kSuccess) return code;
    std::size_t mismatches = 0;
    for (const auto& [path, digest] : recorded.output_digests) {
        const auto now = fs::exists(path) ? sha256_file(path) : std::string("<missing>");
        if (now != digest) {
            err << "output differs from manifest: " << path << "\n";
            ++mismatches;
        }
    }
    if (mismatches) return kDataError;
    out << "replay reproduced " << recorded.output_digests.size() << " outputs\n";
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Logit-level ensembling toolkit: voting, weighted stacking, metrics and synthetic oracles",
                 "skinstack"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags override it");
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", kToolVersion);

    DedupArgs dedup;
    auto* dedup_cmd = app.add_subcommand("dedup", "Keep the first record of every group id");
    dedup_cmd->add_option("--in", dedup.in, "Input metadata CSV")->required();
    dedup_cmd->add_option("--out", dedup.out, "Output metadata CSV (sample_id,group_id,dx)")->required();
    dedup_cmd->add_option("--id-column", dedup.columns.sample_id, "Column holding the sample id");
    dedup_cmd->add_option("--group-column", dedup.columns.group_id, "Column holding the group (patient/lesion) id");
    dedup_cmd->add_option("--label-column", dedup.columns.label, "Column holding the class code");

    SplitArgs split;
    auto* split_cmd = app.add_subcommand("split", "Stratified train/val/test split");
    split_cmd->add_option("--metadata", split.metadata, "Metadata CSV")->required();
    split_cmd->add_option("--ratios", split.ratios, "train,val,test ratios summing to 1")->delimiter(',')->expected(3);
    split_cmd->add_option("--seed", split.seed, "Shuffle seed");
    split_cmd->add_option("--out", split.out, "Output split CSV (sample_id,split)")->required();

    FuseArgs fuse;
    auto* fuse_cmd = app.add_subcommand("fuse", "Combine per-model logits by max, mean or weighted concatenation");
    fuse_cmd->add_option("--logits", fuse.logits, "Logit CSVs in model order")->delimiter(',')->required();
    fuse_cmd->add_option("--mode", fuse.mode, "max | avg | concat");
    fuse_cmd->add_option("--weights", fuse.weights, "Per-model weights for concat")->delimiter(',');
    fuse_cmd->add_option("--split", fuse.split, "Split CSV restricting the samples");
    fuse_cmd->add_option("--subset", fuse.subset, "train | val | test | all (with --split)");
    fuse_cmd->add_option("--out", fuse.out, "Output CSV")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train-stack", "Train the linear meta-learner on weighted stacked logits");
    train_cmd->add_option("--logits", tr.logits, "Logit CSVs in model order")->delimiter(',')->required();
    train_cmd->add_option("--metadata", tr.metadata, "Metadata CSV with labels")->required();
    train_cmd->add_option("--split", tr.split, "Split CSV; trains on train, early-stops on val")->required();
    train_cmd->add_option("--lr0", tr.config.lr0, "Initial learning rate");
    train_cmd->add_option("--momentum", tr.config.momentum, "SGD momentum");
    train_cmd->add_option("--gamma", tr.config.gamma, "Learning-rate decay factor");
    train_cmd->add_option("--step-epochs", tr.config.step_epochs, "Epochs between decays");
    train_cmd->add_option("--patience", tr.config.patience, "Epochs without val-accuracy gain before stopping");
    train_cmd->add_option("--max-epochs", tr.config.max_epochs, "Epoch limit");
    train_cmd->add_option("--batch-size", tr.config.batch_size, "Minibatch size");
    train_cmd->add_option("--seed", tr.config.seed, "Shuffle seed");
    train_cmd->add_option("--weights", tr.weights, "Per-model logit weights")->delimiter(',');
    train_cmd->add_option("--params-out", tr.params_out, "Output parameter file")->required();
    train_cmd->add_option("--history-out", tr.history_out, "Output history CSV")->required();

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Accuracy, weighted F1/recall/precision and AUC report");
    eval_cmd->add_option("--logits", ev.logits, "Logit CSVs in model order")->delimiter(',')->required();
    eval_cmd->add_option("--metadata", ev.metadata, "Metadata CSV with labels")->required();
    eval_cmd->add_option("--split", ev.split, "Split CSV restricting the samples");
    eval_cmd->add_option("--subset", ev.subset, "train | val | test | all (with --split)");
    eval_cmd->add_option("--mode", ev.mode, "single | max | avg | stack | all");
    eval_cmd->add_option("--params", ev.params, "Stacker parameter file (stack, all)");
    eval_cmd->add_option("--weights", ev.weights, "Per-model logit weights for stacking")->delimiter(',');
    eval_cmd->add_option("--name", ev.name, "Model name for the report row");
    eval_cmd->add_option("--auc", ev.auc, "weighted | macro one-vs-rest averaging");
    eval_cmd->add_option("--report-out", ev.report_out, "Report file (.csv for CSV, else markdown)")->required();
    eval_cmd->add_option("--confusion-out", ev.confusion_out, "Confusion matrix CSV of the last row");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Write synthetic Gaussian logits and metadata");
    sim_cmd->add_option("--preset", sim.preset, "none | ham-like (3 models calibrated to 0.80)");
    sim_cmd->add_option("--n-samples", sim.config.n_samples, "Number of samples");
    sim_cmd->add_option("--mu", sim.config.mu, "True-class logit lift");
    sim_cmd->add_option("--sigma", sim.config.sigma, "Noise standard deviation");
    sim_cmd->add_option("--rho", sim.config.rho, "Inter-model noise correlation in [0,1)");
    sim_cmd->add_option("--n-models", sim.config.n_models, "Number of models");
    sim_cmd->add_option("--priors", sim.priors, "7 class priors (default: census proportions)")->delimiter(',');
    sim_cmd->add_option("--target-accuracy", sim.target_accuracy, "Calibrate mu to this accuracy (0 = use --mu)");
    sim_cmd->add_option("--n-probe", sim.n_probe, "Probe size for calibration");
    sim_cmd->add_option("--seed", sim.config.seed, "Generator seed");
    sim_cmd->add_option("--outdir", sim.outdir, "Output directory")->required();

    std::string replay_manifest;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest and verify its outputs");
    replay_cmd->add_option("manifest", replay_manifest, "Manifest JSON")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }

    try {
        for (auto* sub : app.get_subcommands()) {
            const Context ctx{sub->get_name(), args, sub, out, err};
            if (sub == dedup_cmd) return cmd_dedup(dedup, ctx);
            if (sub == split_cmd) return cmd_split(split, ctx);
            if (sub == fuse_cmd) return cmd_fuse(fuse, ctx);
            if (sub == train_cmd) return cmd_train_stack(tr, ctx);
            if (sub == eval_cmd) return cmd_eval(ev, ctx);
            if (sub == sim_cmd) return cmd_simulate(sim, ctx);
            if (sub == replay_cmd) return cmd_replay(replay_manifest, out, err);
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kUsageError;
}

}  // namespace skinstack::cli

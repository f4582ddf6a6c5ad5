// endprompt-lab: plan analysis, spectrum/bound certification, data
// generation, training, retrieval evaluation and report joining for the
// two-segment positional-index laboratory.
//
// Exit codes: 0 success, 1 runtime/assertion failure, 2 invalid input.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "endprompt/checkpoint.hpp"
#include "endprompt/corpus.hpp"
#include "endprompt/data.hpp"
#include "endprompt/interval_set.hpp"
#include "endprompt/model.hpp"
#include "endprompt/position_plan.hpp"
#include "endprompt/rope.hpp"
#include "endprompt/smoothness.hpp"
#include "endprompt/synth_eval.hpp"
#include "endprompt/train.hpp"

namespace {

using nlohmann::json;

json default_config() {
    return json{
        {"model",
         {{"vocab_size", eplab::kByteVocabSize},
          {"model_dim", 32},
          {"num_heads", 2},
          {"num_layers", 2},
          {"mlp_ratio", 4},
          {"rotary_base", 10000.0},
          {"max_eval_positions", 1024},
          {"tied_head", true}}},
        {"plan",
         {{"kind", "endprompt"},
          {"a", 120},
          {"b", 8},
          {"L", 1024},
          {"s", 8.0},
          {"chunks", 2}}},
        {"data",
         {{"prompt_weight", 0.1},
          {"context_weight", 1.0},
          {"cues", "smoke"},
          {"corpus", ""},
          {"synth_docs", 4000},
          {"doc_len", 120},
          {"limit", 0}}},
        {"train",
         {{"steps", 200},
          {"warmup", 20},
          {"lr", 3e-4},
          {"batch_size", 16},
          {"init", ""}}},
        {"eval",
         {{"t_eval", 1024},
          {"n_tasks", 200},
          {"depth", 0.0},
          {"key_len", 2},
          {"value_len", 2},
          {"scale", 0.0},  // 0 means: use plan.s
          {"model_id", "model"}}}};
}

void merge_config_file(json& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file " + path);
    }
    json file;
    try {
        in >> file;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    if (!file.is_object()) {
        throw std::invalid_argument("config root must be a JSON object");
    }
    for (const auto& [section, values] : file.items()) {
        if (!config.contains(section)) {
            throw std::invalid_argument("unknown config section: " + section);
        }
        if (!values.is_object()) {
            throw std::invalid_argument("config section " + section + " must be an object");
        }
        for (const auto& [key, value] : values.items()) {
            if (!config[section].contains(key)) {
                throw std::invalid_argument("unknown config key: " + section + "." + key);
            }
            config[section][key] = value;
        }
    }
}

eplab::ModelConfig model_from(const json& config) {
    eplab::ModelConfig model;
    const json& m = config.at("model");
    model.vocab_size = m.at("vocab_size").get<int>();
    model.model_dim = m.at("model_dim").get<int>();
    model.num_heads = m.at("num_heads").get<int>();
    model.num_layers = m.at("num_layers").get<int>();
    model.mlp_ratio = m.at("mlp_ratio").get<int>();
    model.rotary_base = m.at("rotary_base").get<double>();
    model.max_eval_positions = m.at("max_eval_positions").get<int>();
    model.tied_head = m.at("tied_head").get<bool>();
    model.validate();
    return model;
}

std::string config_comment(const json& config) {
    return "# config: " + config.dump() + "\n";
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::invalid_argument("cannot open output file " + path);
    }
    return out;
}

std::string cues_name(const json& config) {
    const std::string name = config.at("data").at("cues").get<std::string>();
    if (name != "smoke" && name != "default") {
        throw std::invalid_argument("data.cues must be \"smoke\" or \"default\"");
    }
    return name;
}

eplab::CueSet cues_from(const json& config) {
    return cues_name(config) == "default" ? eplab::default_cues() : eplab::smoke_cues();
}

int cmd_plan(const json& config, const std::string& out_path) {
    const json& p = config.at("plan");
    const eplab::PlanKind kind = eplab::plan_kind_from_string(p.at("kind").get<std::string>());
    const std::int64_t a = p.at("a").get<std::int64_t>();
    const std::int64_t b = p.at("b").get<std::int64_t>();
    const std::int64_t L = p.at("L").get<std::int64_t>();
    const double s = p.at("s").get<double>();

    eplab::PositionPlan plan;
    switch (kind) {
        case eplab::PlanKind::endprompt:
            plan = eplab::endprompt_plan({a, b, L, s});
            break;
        case eplab::PlanKind::full:
            plan = eplab::full_plan(a + b, s);
            break;
        case eplab::PlanKind::pose: {
            eplab::Rng rng(0);
            plan = eplab::pose_plan(a + b, p.at("chunks").get<int>(), L, s, rng);
            break;
        }
    }
    const eplab::CoverageReport report = eplab::coverage_report(plan, L);
    const std::string record = eplab::serialize_coverage(report, a, b, L, s);

    std::ofstream out = open_out(out_path);
    out << config_comment(config) << record << "\n";

    const eplab::PlanSpec spec{a, b, L, s};
    std::cout << "plan " << eplab::to_string(kind) << " a=" << a << " b=" << b << " L=" << L
              << " s=" << s << "\n";
    std::cout << "observed distances: " << report.observed.to_string() << "\n";
    std::cout << "gap distances:      "
              << (report.gap.empty() ? std::string("none") : report.gap.to_string()) << "\n";
    std::cout << "coverage fraction:  " << record.substr(record.find(' ')) << "\n";
    if (kind == eplab::PlanKind::endprompt) {
        if (spec.gap_condition()) {
            std::cout << "gap condition met: single-interval gap "
                      << eplab::gap_distances(spec).to_string() << "\n";
        } else {
            std::cout << "gap condition NOT met (L-a-b < max(a,b)); complement reported above\n";
        }
        if (eplab::observed_distances_closed_form(spec) != report.observed) {
            throw std::runtime_error("closed-form observed set disagrees with enumeration");
        }
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_spectrum(const json& config, int dim, double base, double scale,
                 const std::string& out_path) {
    const eplab::AngularSpectrum spec = eplab::frequencies(dim, base);
    if (!(scale >= 1.0)) {
        throw std::invalid_argument("invalid scale (must be >= 1)");
    }
    std::ofstream out = open_out(out_path);
    out << config_comment(config) << "j,theta,omega\n";
    char row[96];
    for (std::size_t j = 0; j < spec.freqs.size(); ++j) {
        std::snprintf(row, sizeof(row), "%zu,%.9g,%.9g\n", j, spec.freqs[j],
                      spec.freqs[j] / scale);
        out << row;
    }
    std::cout << "spectrum dim=" << dim << " base=" << base << " scale=" << scale << ": "
              << spec.freqs.size() << " subspaces, omega_max=" << spec.freqs[0] / scale
              << "\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_bernstein(const json& config, int dim, double base, double scale, int trials,
                  double domain_lo, double domain_hi, std::uint64_t seed,
                  const std::string& out_path) {
    if (trials < 0) {
        throw std::invalid_argument("trials must be >= 0");
    }
    if (!(scale >= 1.0)) {
        throw std::invalid_argument("invalid scale (must be >= 1)");
    }
    const eplab::AngularSpectrum spec = eplab::frequencies(dim, base);
    eplab::Rng rng(seed);

    std::ofstream out = open_out(out_path);
    out << config_comment(config) << eplab::bound_report_csv_header() << "\n";
    bool all_pass = true;
    for (int trial = 0; trial < trials; ++trial) {
        eplab::HeadVector q(static_cast<std::size_t>(dim));
        eplab::HeadVector k(static_cast<std::size_t>(dim));
        for (double& x : q) x = rng.normal();
        for (double& x : k) x = rng.normal();
        const eplab::TrigPolynomial poly =
            eplab::from_decomposition(eplab::decompose(q, k, spec), spec, scale);
        const eplab::BoundReport report = eplab::bernstein_check(poly, domain_lo, domain_hi);
        out << eplab::to_csv_row(report) << "\n";
        all_pass = all_pass && report.pass1 && report.pass2;
    }
    std::cout << "bernstein dim=" << dim << " scale=" << scale << " trials=" << trials << ": "
              << (all_pass ? "all certified checks passed" : "CERTIFICATION FAILURE") << "\n";
    std::cout << "wrote " << out_path << "\n";
    if (!all_pass) {
        throw std::runtime_error("certified derivative bound violated (implementation bug)");
    }
    return 0;
}

int cmd_make_data(const json& config, std::uint64_t seed, const std::string& out_path) {
    const json& d = config.at("data");
    const json& p = config.at("plan");

    std::string corpus;
    const std::string corpus_path = d.at("corpus").get<std::string>();
    if (corpus_path.empty()) {
        eplab::CorpusConfig corpus_config;
        corpus_config.n_docs = d.at("synth_docs").get<std::int64_t>();
        corpus_config.doc_len = d.at("doc_len").get<int>();
        corpus = eplab::synth_corpus(corpus_config, seed);
    } else {
        std::ifstream in(corpus_path, std::ios::binary);
        if (!in) {
            throw std::invalid_argument("cannot open corpus file " + corpus_path);
        }
        std::stringstream buffer;
        buffer << in.rdbuf();
        corpus = buffer.str();
    }

    eplab::SampleSpec spec;
    spec.a = p.at("a").get<std::int64_t>();
    spec.L = p.at("L").get<std::int64_t>();
    spec.s = p.at("s").get<double>();
    spec.plan_kind = eplab::plan_kind_from_string(p.at("kind").get<std::string>());
    spec.prompt_weight = d.at("prompt_weight").get<double>();
    spec.context_weight = d.at("context_weight").get<double>();
    spec.pose_chunks = p.at("chunks").get<int>();
    const eplab::CueSet cues = cues_from(config);
    spec.validate(cues);

    std::istringstream stream(corpus);
    std::vector<std::vector<int>> windows = eplab::ingest(stream, spec.a);
    const std::int64_t limit = d.at("limit").get<std::int64_t>();
    if (limit > 0 && static_cast<std::int64_t>(windows.size()) > limit) {
        windows.resize(static_cast<std::size_t>(limit));
    }
    if (windows.empty()) {
        throw std::invalid_argument("corpus shorter than one context window");
    }

    eplab::Rng rng(seed);
    std::vector<eplab::TrainingSample> samples;
    samples.reserve(windows.size());
    for (const auto& window : windows) {
        samples.push_back(eplab::make_sample(window, cues, spec, rng));
    }
    std::ofstream out = open_out(out_path);
    eplab::write_samples(samples, out);
    std::cout << "make-data: wrote " << samples.size() << " samples to " << out_path << "\n";
    std::cout << "config: " << config.dump() << "\n";
    return 0;
}

int cmd_train(const json& config, const std::string& data_path, std::uint64_t seed, int threads,
              const std::string& out_path, const std::string& metrics_path) {
    if (data_path.empty()) {
        throw std::invalid_argument("train requires --data");
    }
    std::ifstream data_in(data_path);
    if (!data_in) {
        throw std::invalid_argument("cannot open data file " + data_path);
    }
    const std::vector<eplab::TrainingSample> samples = eplab::read_samples(data_in);
    if (samples.empty()) {
        throw std::invalid_argument("data file contains no samples");
    }
    const json& t = config.at("train");
    std::vector<eplab::Batch> batches =
        eplab::batcher(samples, t.at("batch_size").get<std::size_t>());
    {
        // Interleave cue-length groups across steps, deterministically.
        eplab::Rng shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);
        shuffle_rng.shuffle(batches);
    }

    eplab::Schedule schedule;
    schedule.max_steps = t.at("steps").get<std::int64_t>();
    schedule.warmup_steps = t.at("warmup").get<int>();
    schedule.peak_lr = t.at("lr").get<double>();

    eplab::TinyModelParams params;
    const std::string init_path = t.at("init").get<std::string>();
    if (init_path.empty()) {
        eplab::Rng rng(seed);
        params = eplab::TinyModelParams::random_init(model_from(config), rng);
    } else {
        params = eplab::load_checkpoint(init_path);
    }

    std::vector<eplab::StepRecord> log;
    const eplab::TrainState state =
        eplab::train_from(std::move(params), batches, schedule, seed, &log, threads);

    {
        std::ofstream out = open_out(out_path);
        eplab::write_checkpoint(out, state.params);
    }
    {
        std::ofstream metrics = open_out(metrics_path);
        metrics << config_comment(config) << "step,lr,loss_sum,loss_mean,wall_ms\n";
        char row[160];
        for (const eplab::StepRecord& record : log) {
            std::snprintf(row, sizeof(row), "%lld,%.9g,%.9g,%.9g,%.3f\n",
                          static_cast<long long>(record.step), record.lr, record.loss_sum,
                          record.loss_mean, record.wall_ms);
            metrics << row;
        }
    }
    std::cout << "train: " << state.step << " steps";
    if (!log.empty()) {
        std::cout << ", final loss_mean " << log.back().loss_mean;
    }
    std::cout << "\nwrote " << out_path << " and " << metrics_path << "\n";
    return 0;
}

int cmd_eval(const json& config, const std::string& ckpt_path, std::uint64_t seed, int threads,
             const std::string& out_path) {
    if (ckpt_path.empty()) {
        throw std::invalid_argument("eval requires --ckpt");
    }
    std::ifstream probe(ckpt_path, std::ios::binary);
    if (!probe) {
        throw std::invalid_argument("cannot open checkpoint " + ckpt_path);
    }
    probe.close();
    const eplab::TinyModelParams params = eplab::load_checkpoint(ckpt_path);

    const json& e = config.at("eval");
    const json& p = config.at("plan");
    const std::int64_t t_eval = e.at("t_eval").get<std::int64_t>();
    const std::int64_t L = p.at("L").get<std::int64_t>();
    if (t_eval > L) {
        throw std::invalid_argument("t_eval " + std::to_string(t_eval) +
                                    " exceeds the plan target length " + std::to_string(L));
    }
    double scale = e.at("scale").get<double>();
    if (scale == 0.0) {
        scale = p.at("s").get<double>();
    }

    eplab::NiahConfig task_config;
    task_config.t_eval = t_eval;
    task_config.key_len = e.at("key_len").get<int>();
    task_config.value_len = e.at("value_len").get<int>();
    task_config.filler_vocab = eplab::NiahConfig::default_filler_vocab();
    task_config.depth_fraction = e.at("depth").get<double>();

    eplab::Rng rng(seed);
    std::vector<eplab::NiahTask> tasks;
    const int n_tasks = e.at("n_tasks").get<int>();
    if (n_tasks < 1) {
        throw std::invalid_argument("n_tasks must be >= 1");
    }
    tasks.reserve(static_cast<std::size_t>(n_tasks));
    for (int i = 0; i < n_tasks; ++i) {
        tasks.push_back(eplab::gen_niah(rng, task_config));
    }

    const eplab::PlanSpec train_spec{p.at("a").get<std::int64_t>(),
                                     p.at("b").get<std::int64_t>(), L, scale};
    std::vector<eplab::Interval> buckets;
    if (train_spec.gap_condition() && t_eval == L) {
        buckets = eplab::buckets_from_spec(train_spec);
    } else {
        buckets = {{0, t_eval - 1}};
    }

    const eplab::EvalReport report =
        eplab::eval_retrieval(params, tasks, scale, L, buckets,
                              e.at("model_id").get<std::string>(), threads);

    std::ofstream out = open_out(out_path);
    out << config_comment(config) << eplab::eval_report_csv_header(report) << "\n"
        << eplab::eval_report_csv_row(report) << "\n";
    std::cout << "eval: model " << report.model_id << " accuracy " << report.accuracy << " over "
              << report.n << " tasks\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_report(const json& config, const std::vector<std::string>& inputs,
               const std::string& out_path) {
    if (inputs.empty()) {
        throw std::invalid_argument("report requires at least one eval csv");
    }
    std::vector<eplab::EvalReport> reports;
    for (const std::string& path : inputs) {
        std::ifstream in(path);
        if (!in) {
            throw std::invalid_argument("cannot open eval csv " + path);
        }
        const std::vector<eplab::EvalReport> parsed = eplab::parse_eval_reports(in);
        reports.insert(reports.end(), parsed.begin(), parsed.end());
    }
    if (reports.empty()) {
        throw std::invalid_argument("no eval rows found in the inputs");
    }
    const eplab::ComparisonTable table = eplab::compare(reports);
    std::ofstream out = open_out(out_path);
    out << config_comment(config) << table.to_csv();
    std::cout << table.header << "\n";
    for (const std::string& row : table.rows) {
        std::cout << row << "\n";
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int default_threads() {
    if (const char* env = std::getenv("ENDPROMPT_LAB_THREADS")) {
        const int value = std::atoi(env);
        if (value >= 1) {
            return value;
        }
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"endprompt-lab: two-segment positional-index context-extension laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    int threads = default_threads();
    app.add_option("--config", config_path, "JSON config file (flags override file values)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--threads", threads, "worker threads for batch/task parallel paths");

    // plan
    auto* plan = app.add_subcommand("plan", "position-plan coverage analysis");
    std::int64_t plan_a = 0, plan_b = 0, plan_L = 0;
    double plan_s = 0.0;
    std::string plan_kind, plan_out = "plan.txt";
    int plan_chunks = 0;
    auto* plan_a_opt = plan->add_option("--a", plan_a, "context length");
    auto* plan_b_opt = plan->add_option("--b", plan_b, "end-prompt length");
    auto* plan_L_opt = plan->add_option("--L", plan_L, "target context length");
    auto* plan_s_opt = plan->add_option("--s", plan_s, "interpolation scale");
    auto* plan_kind_opt = plan->add_option("--kind", plan_kind, "endprompt|pose|full");
    auto* plan_chunks_opt = plan->add_option("--chunks", plan_chunks, "pose chunk count");
    plan->add_option("--out", plan_out, "coverage record file");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "rotary frequency table");
    int spec_dim = 64;
    double spec_base = 10000.0, spec_scale = 1.0;
    std::string spectrum_out = "spectrum.csv";
    spectrum->add_option("--dim", spec_dim, "head dimension");
    spectrum->add_option("--base", spec_base, "rotary base");
    spectrum->add_option("--scale", spec_scale, "interpolation scale");
    spectrum->add_option("--out", spectrum_out, "output csv");

    // bernstein
    auto* bernstein = app.add_subcommand("bernstein", "derivative-bound certification");
    int bern_dim = 64, bern_trials = 500;
    double bern_base = 10000.0, bern_scale = 1.0, bern_lo = 0.0, bern_hi = 4095.0;
    std::string bernstein_out = "bernstein.csv";
    bernstein->add_option("--dim", bern_dim, "head dimension");
    bernstein->add_option("--base", bern_base, "rotary base");
    bernstein->add_option("--scale", bern_scale, "interpolation scale");
    bernstein->add_option("--trials", bern_trials, "random decompositions to certify");
    bernstein->add_option("--lo", bern_lo, "domain lower bound");
    bernstein->add_option("--hi", bern_hi, "domain upper bound");
    bernstein->add_option("--out", bernstein_out, "output csv");

    // make-data
    auto* make_data = app.add_subcommand("make-data", "construct training samples");
    std::string data_corpus, data_cues, data_out = "samples.jsonl", data_plan_kind;
    std::int64_t data_a = 0, data_L = 0, data_limit = -1, data_synth_docs = -1;
    double data_s = 0.0, data_wp = -1.0;
    auto* corpus_opt = make_data->add_option("--corpus", data_corpus, "corpus file (byte stream)");
    auto* synth_opt =
        make_data->add_option("--synth-docs", data_synth_docs, "synthesize this many documents");
    auto* cues_opt = make_data->add_option("--cues", data_cues, "cue set: smoke|default");
    auto* da_opt = make_data->add_option("--a", data_a, "context window length");
    auto* dL_opt = make_data->add_option("--L", data_L, "target context length");
    auto* ds_opt = make_data->add_option("--s", data_s, "interpolation scale");
    auto* dk_opt = make_data->add_option("--plan", data_plan_kind, "endprompt|pose|full");
    auto* dwp_opt = make_data->add_option("--wp", data_wp, "prompt loss weight");
    auto* dlimit_opt = make_data->add_option("--limit", data_limit, "max samples (0 = all)");
    make_data->add_option("--out", data_out, "output jsonl");

    // train
    auto* train_cmd = app.add_subcommand("train", "train or fine-tune the model");
    std::string train_data, train_init, train_out = "model.ckpt", train_metrics = "metrics.csv";
    std::int64_t train_steps = -1;
    int train_warmup = -1, train_batch = -1;
    double train_lr = -1.0;
    train_cmd->add_option("--data", train_data, "training samples (jsonl)");
    auto* tsteps_opt = train_cmd->add_option("--max-steps", train_steps, "optimizer steps");
    auto* twarm_opt = train_cmd->add_option("--warmup", train_warmup, "warmup steps");
    auto* tlr_opt = train_cmd->add_option("--lr", train_lr, "peak learning rate");
    auto* tbatch_opt = train_cmd->add_option("--batch-size", train_batch, "batch size");
    auto* tinit_opt = train_cmd->add_option("--init", train_init, "initial checkpoint");
    train_cmd->add_option("--out", train_out, "checkpoint output");
    train_cmd->add_option("--metrics", train_metrics, "metrics csv output");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "single-needle retrieval evaluation");
    std::string eval_ckpt, eval_out = "eval.csv", eval_model_id;
    std::int64_t eval_t = -1;
    int eval_n = -1;
    double eval_depth = -1.0, eval_scale = -1.0;
    std::int64_t eval_plan_a = 0, eval_plan_b = 0, eval_plan_L = 0;
    eval_cmd->add_option("--ckpt", eval_ckpt, "model checkpoint");
    auto* et_opt = eval_cmd->add_option("--t-eval", eval_t, "evaluation length");
    auto* en_opt = eval_cmd->add_option("--n-tasks", eval_n, "number of tasks");
    auto* ed_opt = eval_cmd->add_option("--depth", eval_depth, "needle depth fraction");
    auto* es_opt = eval_cmd->add_option("--scale", eval_scale, "interpolation scale");
    auto* eid_opt = eval_cmd->add_option("--model-id", eval_model_id, "model id for the report");
    auto* ea_opt = eval_cmd->add_option("--plan-a", eval_plan_a, "training plan a (for buckets)");
    auto* eb_opt = eval_cmd->add_option("--plan-b", eval_plan_b, "training plan b (for buckets)");
    auto* eL_opt = eval_cmd->add_option("--plan-L", eval_plan_L, "training plan L (for buckets)");
    eval_cmd->add_option("--out", eval_out, "output csv");

    // report
    auto* report_cmd = app.add_subcommand("report", "join eval csvs into a comparison table");
    std::vector<std::string> report_inputs;
    std::string report_out = "report.csv";
    report_cmd->add_option("inputs", report_inputs, "eval csv files");
    report_cmd->add_option("--out", report_out, "output csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    try {
        json config = default_config();
        if (!config_path.empty()) {
            merge_config_file(config, config_path);
        }

        if (plan->parsed()) {
            if (plan_a_opt->count()) config["plan"]["a"] = plan_a;
            if (plan_b_opt->count()) config["plan"]["b"] = plan_b;
            if (plan_L_opt->count()) config["plan"]["L"] = plan_L;
            if (plan_s_opt->count()) config["plan"]["s"] = plan_s;
            if (plan_kind_opt->count()) config["plan"]["kind"] = plan_kind;
            if (plan_chunks_opt->count()) config["plan"]["chunks"] = plan_chunks;
            return cmd_plan(config, plan_out);
        }
        if (spectrum->parsed()) {
            return cmd_spectrum(config, spec_dim, spec_base, spec_scale, spectrum_out);
        }
        if (bernstein->parsed()) {
            return cmd_bernstein(config, bern_dim, bern_base, bern_scale, bern_trials, bern_lo,
                                 bern_hi, seed, bernstein_out);
        }
        if (make_data->parsed()) {
            if (corpus_opt->count()) config["data"]["corpus"] = data_corpus;
            if (synth_opt->count()) config["data"]["synth_docs"] = data_synth_docs;
            if (cues_opt->count()) config["data"]["cues"] = data_cues;
            if (da_opt->count()) config["plan"]["a"] = data_a;
            if (dL_opt->count()) config["plan"]["L"] = data_L;
            if (ds_opt->count()) config["plan"]["s"] = data_s;
            if (dk_opt->count()) config["plan"]["kind"] = data_plan_kind;
            if (dwp_opt->count()) config["data"]["prompt_weight"] = data_wp;
            if (dlimit_opt->count()) config["data"]["limit"] = data_limit;
            return cmd_make_data(config, seed, data_out);
        }
        if (train_cmd->parsed()) {
            if (tsteps_opt->count()) config["train"]["steps"] = train_steps;
            if (twarm_opt->count()) config["train"]["warmup"] = train_warmup;
            if (tlr_opt->count()) config["train"]["lr"] = train_lr;
            if (tbatch_opt->count()) config["train"]["batch_size"] = train_batch;
            if (tinit_opt->count()) config["train"]["init"] = train_init;
            return cmd_train(config, train_data, seed, threads, train_out, train_metrics);
        }
        if (eval_cmd->parsed()) {
            if (et_opt->count()) config["eval"]["t_eval"] = eval_t;
            if (en_opt->count()) config["eval"]["n_tasks"] = eval_n;
            if (ed_opt->count()) config["eval"]["depth"] = eval_depth;
            if (es_opt->count()) config["eval"]["scale"] = eval_scale;
            if (eid_opt->count()) config["eval"]["model_id"] = eval_model_id;
            if (ea_opt->count()) config["plan"]["a"] = eval_plan_a;
            if (eb_opt->count()) config["plan"]["b"] = eval_plan_b;
            if (eL_opt->count()) config["plan"]["L"] = eval_plan_L;
            return cmd_eval(config, eval_ckpt, seed, threads, eval_out);
        }
        if (report_cmd->parsed()) {
            return cmd_report(config, report_inputs, report_out);
        }
        std::cerr << app.help() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 1;
    }
}

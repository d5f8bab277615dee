#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "mixdag/commands.hpp"
#include "mixdag/config.hpp"
#include "mixdag/io.hpp"
#include "mixdag/pipeline.hpp"
#include "mixdag/preprocess.hpp"
#include "mixdag/studies.hpp"

namespace {

using namespace mixdag;

struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
    cmd->add_option("--config", flags.file, "key = value config file");
    for (const auto& key : config_keys()) cmd->add_option("--" + key, flags.values[key], "config key " + key);
}

RunConfig resolve(const ConfigFlags& flags) {
    RunConfig config;
    if (!flags.file.empty()) apply_config(config, read_config_file(flags.file));
    std::map<std::string, std::string> set;
    for (const auto& [k, v] : flags.values)
        if (!v.empty()) set[k] = v;
    apply_config(config, set);
    config.validate();
    return config;
}

void print_files(const std::string& dir, const std::vector<std::string>& files) {
    for (const auto& f : files) std::cout << (std::filesystem::path(dir) / f).string() << '\n';
}

int run_ingest(const std::string& input, const std::string& out, const std::vector<std::string>& pins,
               const std::string& background, std::size_t clusters, std::uint64_t seed) {
    IngestOptions options;
    options.seed = seed;
    for (const auto& pin : pins) {
        const auto eq = pin.find('=');
        if (eq == std::string::npos) throw ConfigError("--pin expects name=continuous|discrete, got '" + pin + "'");
        options.overrides[pin.substr(0, eq)] = pin.substr(eq + 1);
    }
    ensure_directory(out);
    IngestResult r = ingest_expression(input, options);
    const std::filesystem::path dir(out);
    if (!background.empty()) {
        if (clusters == 0) throw ConfigError("--clusters must be positive with --background");
        const CsvTable bg = read_csv(background);
        if (bg.unit_ids != r.data.unit_ids) throw ConfigError("background units do not match the expression units");
        Matrix m(static_cast<Eigen::Index>(bg.rows.size()), static_cast<Eigen::Index>(bg.header.size()));
        for (std::size_t i = 0; i < bg.rows.size(); ++i)
            for (std::size_t j = 0; j < bg.header.size(); ++j) m(i, j) = bg.rows[i][j];
        r.data.block = hier_cluster_blocks(m, clusters);
        write_blocks((dir / "blocks.tsv").string(), r.data.unit_ids, r.data.block);
    }
    write_dataset_csv((dir / "data.csv").string(), r.data);
    write_specs((dir / "specs.tsv").string(), r.data.specs);
    std::ofstream rep(dir / "discretization.tsv");
    rep << "name\tmodel\tbic_k1\tbic_k2\tbic_k3\tdiscrete\tlevels\tpinned\twarning\n";
    for (const auto& e : r.report) {
        rep << e.name << '\t' << to_string(e.chosen);
        for (std::size_t k = 0; k < 3; ++k) rep << '\t' << (k < e.bic.size() ? format_double(e.bic[k]) : "-");
        rep << '\t' << (e.discrete ? "yes" : "no") << '\t' << e.levels << '\t' << (e.pinned ? "yes" : "no") << '\t'
            << (e.warning.empty() ? "-" : e.warning) << '\n';
        if (!e.warning.empty()) std::cerr << "warning: " << e.name << ": " << e.warning << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal structure learning for dependent mixed data"};
    app.require_subcommand(1);

    ConfigFlags sim_flags, pipe_flags;
    auto* sim = app.add_subcommand("simulate", "generate a synthetic dependent mixed dataset with truth artifacts");
    add_config_flags(sim, sim_flags);
    auto* pipe = app.add_subcommand("pipeline", "estimate a CPDAG from data, specs and blocks");
    add_config_flags(pipe, pipe_flags);

    auto* rep = app.add_subcommand("reproduce", "run a desk-scale study and write a pass/fail report");
    std::string study;
    std::string rep_out = "reproduce";
    StudyOptions study_options;
    std::size_t rep_threads = 1;
    rep->add_option("study", study, "fig3-desk | fig4-desk | cv-desk | cov-desk | alg1-desk | all")->required();
    rep->add_option("--out", rep_out, "output directory");
    rep->add_option("--seed", study_options.seed, "master seed");
    rep->add_option("--replicates", study_options.replicates, "datasets per setting");
    rep->add_option("--threads", rep_threads, "worker threads");

    auto* ing = app.add_subcommand("ingest", "discretization test and optional block clustering for expression data");
    std::string input, ing_out = "ingest", background;
    std::vector<std::string> pins;
    std::size_t clusters = 0;
    std::uint64_t ing_seed = 1;
    ing->add_option("--input", input, "expression CSV (units x genes)")->required();
    ing->add_option("--out", ing_out, "output directory");
    ing->add_option("--pin", pins, "name=continuous|discrete, skips the test for that column");
    ing->add_option("--background", background, "background gene CSV for block clustering");
    ing->add_option("--clusters", clusters, "number of blocks to cut the dendrogram at");
    ing->add_option("--seed", ing_seed, "seed for mixture restarts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const RunConfig config = resolve(sim_flags);
            print_files(config.out, cmd_simulate(config));
        } else if (pipe->parsed()) {
            const RunConfig config = resolve(pipe_flags);
            print_files(config.out, cmd_pipeline(config));
        } else if (rep->parsed()) {
            std::vector<std::string> names;
            if (study == "all") {
                names = study_names();
            } else {
                if (std::find(study_names().begin(), study_names().end(), study) == study_names().end()) {
                    std::cerr << "unknown study '" << study << "'\n" << rep->help();
                    return 2;
                }
                names = {study};
            }
            ThreadPool pool(rep_threads);
            for (const auto& name : names) {
                const StudyReport r = run_study(name, study_options, pool);
                write_study(rep_out, r);
                std::cout << "# " << r.study << " (" << format_double(r.seconds) << " s)\n" << format_checks(r);
            }
        } else if (ing->parsed()) {
            return run_ingest(input, ing_out, pins, background, clusters, ing_seed);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const StageError& e) {
        std::cerr << "stage " << e.stage() << " failed: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

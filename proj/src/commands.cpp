#include "mixdag/commands.hpp"

#include <filesystem>
#include <fstream>

#include "mixdag/io.hpp"

namespace mixdag {

namespace {

std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

Cpdag as_cpdag(const Dag& g) {
    Cpdag c(g.size());
    for (const auto& [a, b] : g.edges()) c.set_directed(a, b);
    return c;
}

}  // namespace

std::vector<std::string> cmd_simulate(const RunConfig& config) {
    config.validate();
    ensure_directory(config.out);
    const SimulationConfig sc = config.simulation();
    const Simulation sim = config.dag.empty() ? simulate(sc) : simulate_on(read_dag_edge_list(config.dag), sc);
    const auto names = sim.data.names();
    std::vector<std::string> files{"data.csv", "specs.tsv", "blocks.tsv", "truth_dag.tsv", "truth_cpdag.tsv",
                                   "truth_cov.txt"};
    write_dataset_csv(join(config.out, "data.csv"), sim.data);
    std::vector<VariableSpec> specs = sim.data.specs;
    for (std::size_t j = 0; j < specs.size(); ++j) specs[j].thresholds = sim.model.specs[j].thresholds;
    write_specs(join(config.out, "specs.tsv"), specs);
    write_blocks(join(config.out, "blocks.tsv"), sim.data.unit_ids, sim.data.block);
    write_edges(join(config.out, "truth_dag.tsv"), as_cpdag(sim.model.dag), names);
    write_edges(join(config.out, "truth_cpdag.tsv"), dag_to_cpdag(sim.model.dag), names);
    write_covariance(join(config.out, "truth_cov.txt"), sim.cov.cov);
    if (sim.background.cols() > 0) {
        std::vector<std::string> header;
        for (Eigen::Index q = 0; q < sim.background.cols(); ++q) header.push_back("bg" + std::to_string(q + 1));
        write_matrix_csv(join(config.out, "background.csv"), sim.background, header, sim.data.unit_ids);
        files.push_back("background.csv");
    }
    return files;
}

std::vector<std::string> cmd_pipeline(const RunConfig& config) {
    config.validate();
    if (config.data.empty() || config.specs.empty()) throw ConfigError("pipeline needs `data` and `specs`");
    if (config.blocks.empty() && config.strategy != Strategy::baseline)
        throw ConfigError("strategy " + to_string(config.strategy) + " needs a `blocks` file");
    ensure_directory(config.out);
    const MixedDataset x = load_dataset(config.data, config.specs, config.blocks);
    const auto names = x.names();
    ThreadPool pool(config.threads);
    const PipelineConfig pc = config.pipeline();
    const PipelineResult r = run_pipeline(x, x.block_groups(), pc, pool);

    std::vector<std::string> files{"cpdag.tsv", "timing.tsv", "warnings.txt"};
    if (config.bootstrap > 0) {
        BootstrapConfig bc;
        bc.replicates = config.bootstrap;
        bc.fraction = config.bootstrap_fraction;
        bc.seed = config.seed;
        bc.pipeline = pc;
        const BootstrapResult b = bootstrap_confidence(x, bc, pool, &r.graph);
        write_edges(join(config.out, "cpdag.tsv"), b.final_graph, names, &b.confidence);
        write_edges(join(config.out, "cpdag_full.tsv"), b.full, names, &b.confidence);
        files.push_back("cpdag_full.tsv");
    } else {
        write_edges(join(config.out, "cpdag.tsv"), r.graph, names);
    }
    if (config.strategy != Strategy::baseline) {
        write_preestimate(join(config.out, "preestimate.tsv"), r.pre, names);
        files.push_back("preestimate.tsv");
        if (config.strategy != Strategy::consensus_ident) {
            write_covariance(join(config.out, "sigma.txt"), r.cov);
            files.push_back("sigma.txt");
        }
    }
    {
        std::ofstream t(join(config.out, "timing.tsv"));
        t << "stage\tseconds\n";
        for (const auto& s : r.timings) t << s.stage << '\t' << format_double(s.seconds) << '\n';
    }
    {
        std::ofstream w(join(config.out, "warnings.txt"));
        for (const auto& s : r.warnings) w << s << '\n';
    }
    return files;
}

}  // namespace mixdag

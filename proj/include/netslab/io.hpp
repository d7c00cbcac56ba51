#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "netslab/dataset.hpp"
#include "netslab/design.hpp"
#include "netslab/errors.hpp"
#include "netslab/gene_network.hpp"
#include "netslab/metrics.hpp"
#include "netslab/model.hpp"
#include "netslab/simgen.hpp"
#include "netslab/tuning.hpp"
#include "netslab/vbem.hpp"

namespace netslab {

namespace detail {

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw input_error("write to '" + path + "' failed");
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace detail

// ---- gene network files ----------------------------------------------------
//
// Text form:
//   #network <id>
//   node <gene-id>
//   edge <gene-id> <gene-id>
// JSON form: [{"id": ..., "nodes": [...], "edges": [[a, b], ...]}, ...]
// Readers sniff the first non-space byte.

inline std::vector<GeneNetwork> parse_networks_text(const std::string& text) {
    std::vector<GeneNetwork> out;
    std::string id;
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    bool open = false;

    const auto flush = [&] {
        if (!open) return;
        out.push_back(make_network(std::move(id), std::move(nodes), edges));
        nodes.clear();
        edges.clear();
        open = false;
    };

    std::istringstream in(text);
    std::string line;
    Index lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "#network") {
            flush();
            if (!(ls >> id)) throw input_error("line " + std::to_string(lineno) + ": #network needs an id");
            open = true;
        } else if (tok == "node") {
            std::string g;
            if (!open || !(ls >> g))
                throw input_error("line " + std::to_string(lineno) + ": node outside a network or missing id");
            nodes.push_back(std::move(g));
        } else if (tok == "edge") {
            std::string a, b;
            if (!open || !(ls >> a >> b))
                throw input_error("line " + std::to_string(lineno) + ": edge needs two gene ids inside a network");
            edges.emplace_back(std::move(a), std::move(b));
        } else if (tok[0] == '#') {
            continue;  // comment
        } else {
            throw input_error("line " + std::to_string(lineno) + ": unknown directive '" + tok + "'");
        }
    }
    flush();
    if (out.empty()) throw input_error("no networks found");
    return out;
}

inline std::vector<GeneNetwork> parse_networks_json(const nlohmann::json& doc) {
    if (!doc.is_array()) throw input_error("network JSON must be an array of objects");
    std::vector<GeneNetwork> out;
    for (const auto& e : doc) {
        std::vector<std::pair<std::string, std::string>> edges;
        for (const auto& pr : e.at("edges")) {
            if (!pr.is_array() || pr.size() != 2)
                throw input_error("network '" + e.at("id").get<std::string>() + "' has a malformed edge entry");
            edges.emplace_back(pr[0].get<std::string>(), pr[1].get<std::string>());
        }
        out.push_back(make_network(e.at("id").get<std::string>(),
                                   e.at("nodes").get<std::vector<std::string>>(), edges));
    }
    if (out.empty()) throw input_error("no networks found");
    return out;
}

inline std::vector<GeneNetwork> read_networks(const std::string& path) {
    const std::string text = detail::slurp(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw input_error("'" + path + "' is empty");
    try {
        if (text[first] == '[' || text[first] == '{') return parse_networks_json(nlohmann::json::parse(text));
        return parse_networks_text(text);
    } catch (const nlohmann::json::exception& e) {
        throw input_error("'" + path + "': " + e.what());
    }
}

inline void write_networks(const std::string& path, const std::vector<GeneNetwork>& networks) {
    std::ostringstream out;
    for (const GeneNetwork& net : networks) {
        out << "#network " << net.id << "\n";
        for (const std::string& g : net.nodes) out << "node " << g << "\n";
        for (const NodePair& e : net.edges)
            out << "edge " << net.nodes[static_cast<std::size_t>(e.first)] << ' '
                << net.nodes[static_cast<std::size_t>(e.second)] << "\n";
    }
    detail::spit(path, out.str());
}

// ---- registry --------------------------------------------------------------

inline nlohmann::json registry_to_json(const ColumnRegistry& reg) {
    nlohmann::json nets = nlohmann::json::array();
    for (std::size_t k = 0; k < reg.network_ids.size(); ++k)
        nets.push_back({{"id", reg.network_ids[k]},
                        {"offset", reg.offsets[k]},
                        {"block_size", reg.block_sizes[k]}});
    nlohmann::json slots = nlohmann::json::array();
    for (const Slot& s : reg.slots)
        slots.push_back({{"network", s.network},
                         {"kind", s.kind == SlotKind::main ? "main" : "interaction"},
                         {"local_a", s.local_a},
                         {"local_b", s.local_b},
                         {"gene_a", s.gene_a},
                         {"gene_b", s.gene_b}});
    return {{"total_dim", reg.total_dim()}, {"networks", nets}, {"slots", slots}};
}

inline void write_registry(const std::string& path, const ColumnRegistry& reg) {
    detail::spit(path, registry_to_json(reg).dump(2) + "\n");
}

// ---- fit results -----------------------------------------------------------

struct ResultDoc {
    VariationalState state;
    SelectionResult selection;
    bool converged = false;
    int n_sweeps = 0;
    Hyperparameters hyper;
    bool standardized = false;
    Eigen::VectorXd gene_means, gene_scales;
};

inline nlohmann::json result_to_json(const ResultDoc& doc) {
    nlohmann::json j;
    j["eta"] = detail::to_std(doc.state.eta);
    j["r"] = detail::to_std(doc.state.r);
    j["m"] = detail::to_std(doc.state.m);
    j["sigma2"] = detail::to_std(doc.state.sigma2);
    j["tau"] = doc.state.tau;
    j["theta"] = doc.state.theta;
    j["elbo_trace"] = doc.state.elbo_trace;
    j["selected_mains"] = doc.selection.selected_mains;
    j["selected_interactions"] = doc.selection.selected_interactions;
    j["selected_networks"] = doc.selection.selected_networks;
    j["distinct_mains"] = doc.selection.distinct_mains;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [a, b] : doc.selection.distinct_interactions) pairs.push_back({a, b});
    j["distinct_interactions"] = pairs;
    j["converged"] = doc.converged;
    j["n_sweeps"] = doc.n_sweeps;
    j["hyperparameters"] = {{"s1", doc.hyper.s1},   {"s2", doc.hyper.s2},       {"a", doc.hyper.a},
                            {"b", doc.hyper.b},     {"ridge", doc.hyper.ridge}, {"threshold", doc.hyper.threshold}};
    j["standardized"] = doc.standardized;
    if (doc.standardized) {
        j["gene_means"] = detail::to_std(doc.gene_means);
        j["gene_scales"] = detail::to_std(doc.gene_scales);
    }
    return j;
}

inline ResultDoc result_from_json(const nlohmann::json& j) {
    ResultDoc doc;
    doc.state.eta = detail::to_eigen(j.at("eta").get<std::vector<double>>());
    doc.state.r = detail::to_eigen(j.at("r").get<std::vector<double>>());
    doc.state.m = detail::to_eigen(j.at("m").get<std::vector<double>>());
    doc.state.sigma2 = detail::to_eigen(j.at("sigma2").get<std::vector<double>>());
    doc.state.a_tilde = Eigen::VectorXd::Ones(doc.state.m.size());
    doc.state.b_tilde = Eigen::VectorXd::Ones(doc.state.m.size());
    doc.state.tau = j.at("tau").get<double>();
    doc.state.theta = j.at("theta").get<double>();
    doc.state.elbo_trace = j.at("elbo_trace").get<std::vector<double>>();
    doc.selection.eta = doc.state.eta;
    doc.selection.r = doc.state.r;
    doc.selection.selected_mains = j.at("selected_mains").get<std::vector<Index>>();
    doc.selection.selected_interactions = j.at("selected_interactions").get<std::vector<Index>>();
    doc.selection.selected_networks = j.at("selected_networks").get<std::vector<std::string>>();
    doc.selection.distinct_mains = j.at("distinct_mains").get<std::vector<std::string>>();
    for (const auto& pr : j.at("distinct_interactions"))
        doc.selection.distinct_interactions.emplace_back(pr.at(0).get<std::string>(), pr.at(1).get<std::string>());
    doc.selection.coefficients = Eigen::VectorXd::Zero(doc.state.m.size());
    for (Index j2 : doc.selection.selected_mains) doc.selection.coefficients[j2] = doc.state.m[j2];
    for (Index j2 : doc.selection.selected_interactions) doc.selection.coefficients[j2] = doc.state.m[j2];
    doc.converged = j.at("converged").get<bool>();
    doc.n_sweeps = j.at("n_sweeps").get<int>();
    if (j.contains("hyperparameters")) {
        const auto& h = j.at("hyperparameters");
        doc.hyper.s1 = h.at("s1").get<double>();
        doc.hyper.s2 = h.at("s2").get<double>();
        doc.hyper.a = h.at("a").get<double>();
        doc.hyper.b = h.at("b").get<double>();
        doc.hyper.ridge = h.at("ridge").get<double>();
        doc.hyper.threshold = h.at("threshold").get<double>();
    }
    doc.standardized = j.value("standardized", false);
    if (doc.standardized) {
        doc.gene_means = detail::to_eigen(j.at("gene_means").get<std::vector<double>>());
        doc.gene_scales = detail::to_eigen(j.at("gene_scales").get<std::vector<double>>());
    }
    return doc;
}

inline void write_result(const std::string& path, const ResultDoc& doc) {
    detail::spit(path, result_to_json(doc).dump(2) + "\n");
}

inline ResultDoc read_result(const std::string& path) {
    try {
        return result_from_json(nlohmann::json::parse(detail::slurp(path)));
    } catch (const nlohmann::json::exception& e) {
        throw input_error("'" + path + "': " + e.what());
    }
}

// ---- ground truth ----------------------------------------------------------

inline nlohmann::json truth_to_json(const GroundTruth& truth, const std::vector<std::string>& gene_ids) {
    nlohmann::json mains = nlohmann::json::array();
    for (const TruthMain& tm : truth.mains)
        mains.push_back({{"slot", tm.slot},
                         {"gene", tm.gene},
                         {"id", gene_ids[static_cast<std::size_t>(tm.gene)]},
                         {"coef", tm.coef}});
    nlohmann::json ints = nlohmann::json::array();
    for (const TruthInteraction& ti : truth.interactions)
        ints.push_back({{"gene_a", ti.gene_a},
                        {"gene_b", ti.gene_b},
                        {"id_a", gene_ids[static_cast<std::size_t>(ti.gene_a)]},
                        {"id_b", gene_ids[static_cast<std::size_t>(ti.gene_b)]},
                        {"coef", ti.coef},
                        {"slot", ti.slot}});
    return {{"networks", truth.networks},
            {"mains", mains},
            {"interactions", ints},
            {"slot_coefficients", detail::to_std(truth.slot_coefficients)}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
    GroundTruth truth;
    truth.networks = j.at("networks").get<std::vector<std::string>>();
    for (const auto& e : j.at("mains"))
        truth.mains.push_back({e.at("slot").get<Index>(), e.at("gene").get<Index>(), e.at("coef").get<double>()});
    for (const auto& e : j.at("interactions"))
        truth.interactions.push_back({e.at("gene_a").get<Index>(), e.at("gene_b").get<Index>(),
                                      e.at("coef").get<double>(), e.at("slot").get<Index>()});
    truth.slot_coefficients = detail::to_eigen(j.at("slot_coefficients").get<std::vector<double>>());
    return truth;
}

inline void write_truth(const std::string& path, const GroundTruth& truth,
                        const std::vector<std::string>& gene_ids) {
    detail::spit(path, truth_to_json(truth, gene_ids).dump(2) + "\n");
}

inline GroundTruth read_truth(const std::string& path) {
    try {
        return truth_from_json(nlohmann::json::parse(detail::slurp(path)));
    } catch (const nlohmann::json::exception& e) {
        throw input_error("'" + path + "': " + e.what());
    }
}

// ---- tuning grid report ----------------------------------------------------

inline nlohmann::json grid_to_json(const TuningResult& tr) {
    nlohmann::json rows = nlohmann::json::array();
    for (const GridPoint& gp : tr.grid)
        rows.push_back({{"s2", gp.s2},
                        {"bic", gp.bic},
                        {"df", gp.df},
                        {"rss", gp.rss},
                        {"n_mains", gp.n_mains},
                        {"n_interactions", gp.n_interactions},
                        {"n_networks", gp.n_networks},
                        {"converged", gp.converged}});
    return rows;
}

// ---- metrics CSV -----------------------------------------------------------

inline const char* metrics_csv_header() {
    return "replicate,m_tp,m_fp,i_tp,i_fp,n_tp,n_fp,m_rsse,i_rsse,pmse";
}

inline std::string metrics_csv_row(const std::string& label, const MetricsReport& r) {
    std::ostringstream out;
    out << label;
    for (double v : {r.m_tp, r.m_fp, r.i_tp, r.i_fp, r.n_tp, r.n_fp, r.m_rsse, r.i_rsse, r.pmse})
        out << ',' << detail::format_double(v);
    return out.str();
}

inline void append_metrics_row(const std::string& path, const std::string& label, const MetricsReport& r) {
    const bool fresh = !std::ifstream(path).good();
    std::ofstream out(path, std::ios::app);
    if (!out) throw input_error("cannot open '" + path + "' for appending");
    if (fresh) out << metrics_csv_header() << "\n";
    out << metrics_csv_row(label, r) << "\n";
    if (!out) throw input_error("write to '" + path + "' failed");
}

inline std::vector<std::pair<std::string, MetricsReport>> read_metrics_csv(const std::string& path) {
    std::istringstream in(detail::slurp(path));
    std::string line;
    if (!std::getline(in, line)) throw input_error("'" + path + "' is empty");
    if (line != metrics_csv_header())
        throw input_error("'" + path + "' does not look like a metrics CSV (unexpected header)");
    std::vector<std::pair<std::string, MetricsReport>> rows;
    Index lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 10)
            throw input_error("'" + path + "' line " + std::to_string(lineno) + ": expected 10 cells, got " +
                              std::to_string(cells.size()));
        MetricsReport r;
        double* fields[] = {&r.m_tp, &r.m_fp, &r.i_tp, &r.i_fp, &r.n_tp, &r.n_fp, &r.m_rsse, &r.i_rsse, &r.pmse};
        for (std::size_t i = 0; i < 9; ++i)
            *fields[i] = detail::parse_double(cells[i + 1], path + " line " + std::to_string(lineno));
        rows.emplace_back(cells[0], r);
    }
    return rows;
}

}  // namespace netslab

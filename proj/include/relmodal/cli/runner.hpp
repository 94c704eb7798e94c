#ifndef RELMODAL_CLI_RUNNER_HPP
#define RELMODAL_CLI_RUNNER_HPP

#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scenario.hpp"

namespace relmodal::cli {

inline constexpr int report_schema_version = 1;

struct RunOptions {
    Tolerances    tol;
    std::uint64_t seed = 0;
};

/// A task that ran but whose check reported a violation.
class CheckFailed : public Error {
  public:
    using Error::Error;
};

namespace detail {

struct Subsystem {
    Embedding                embedding;
    Factor                   factor = Factor::a;
    std::string              id;
    std::optional<FockSpace> space; // mode structure, when the embedding has one
    std::optional<FockSpace> rest;
};

inline Subsystem select_subsystem(const NamedEmbedding &ne, const json &task) {
    const auto       &c       = ne.composed;
    const std::string wanted  = task.value("subsystem", c.factor_ids.front());
    const bool        spaces  = !ne.factor_spaces.empty();
    if(wanted == "complement" || wanted == c.joint.b_id) {
        Subsystem s{c.joint, Factor::b, c.joint.b_id, std::nullopt, std::nullopt};
        if(spaces) s.space = ne.complement_space;
        return s;
    }
    for(std::size_t i = 0; i < c.factor_count(); ++i) {
        if(c.factor_ids[i] != wanted) continue;
        Subsystem s{c.factor_count() == 1 ? c.joint : factor_embedding(c, i), Factor::a, wanted, std::nullopt, std::nullopt};
        if(spaces) {
            s.space = ne.factor_spaces[i];
            std::optional<FockSpace> rest;
            for(std::size_t k = 0; k < c.factor_count(); ++k)
                if(k != i) rest = rest ? tensor_product(*rest, ne.factor_spaces[k]) : ne.factor_spaces[k];
            s.rest = rest ? tensor_product(*rest, *ne.complement_space) : *ne.complement_space;
        }
        return s;
    }
    throw InvalidArgument("embedding '" + ne.name + "' has no subsystem '" + wanted + "'");
}

inline std::vector<double> task_times(const json &task) {
    const json &t = field(task, "times", "trace-trajectory");
    if(t.is_array()) return t.get<std::vector<double>>();
    const double start = t.value("start", 0.0);
    const double stop  = field(t, "stop", "times").get<double>();
    const int    count = field(t, "count", "times").get<int>();
    if(count < 1) throw InvalidArgument("times.count must be positive");
    std::vector<double> out;
    for(int k = 0; k < count; ++k) out.push_back(count == 1 ? start : start + (stop - start) * k / (count - 1));
    return out;
}

inline json groups_to_json(const std::vector<std::vector<std::size_t>> &groups) {
    json out = json::array();
    for(const auto &g : groups) out.push_back(g);
    return out;
}

inline json spectrum_to_json(const SpectralDecomposition &dec) {
    json vectors = json::array();
    for(const auto &v : dec.eigenvectors) vectors.push_back(vector_to_json(v.amplitudes));
    return {{"subsystem", dec.space_id},
            {"eigenvalues", dec.eigenvalues},
            {"eigenvectors", vectors},
            {"degeneracy_groups", groups_to_json(dec.degeneracy_groups)},
            {"degenerate", dec.degenerate()},
            {"annihilation_probability", dec.annihilation_probability},
            {"dropped_count", dec.dropped_count}};
}

inline std::string outcome_label(const SampleOutcome &o) {
    return o.kind == SampleOutcome::Kind::annihilated ? std::string("annihilated") : std::to_string(o.index);
}

class TaskRunner {
  public:
    TaskRunner(const Scenario &s, const RunOptions &opt) : s_(s), opt_(opt), states_(s.states) {}

    json run(const json &task, std::size_t index) {
        const auto command = task.at("command").get<std::string>();
        if(command == "reduce") return reduce(task);
        if(command == "spectrum") return spectrum(task);
        if(command == "schmidt") return schmidt(task);
        if(command == "joint") return joint(task);
        if(command == "evolve") return evolve_task(task);
        if(command == "trace-trajectory") return trajectory(task);
        if(command == "check-ssr") return check_ssr(task);
        if(command == "check-isolated") return check_isolated(task);
        if(command == "sample") return sample(task, index);
        throw InvalidArgument("unknown command '" + command + "'");
    }

  private:
    const StateVector &state(const json &task) const {
        const auto name = task.at("state").get<std::string>();
        auto       it   = states_.find(name);
        if(it == states_.end()) throw InvalidArgument("undefined state '" + name + "'");
        return it->second;
    }
    const NamedEmbedding &embedding(const json &task) const { return s_.embeddings.at(task.at("embedding").get<std::string>()); }
    const HamiltonianSpec &hamiltonian(const json &task) const { return s_.hamiltonians.at(task.at("hamiltonian").get<std::string>()); }

    json reduce(const json &task) const {
        const auto sub = select_subsystem(embedding(task), task);
        const auto rho = relational_state(state(task), sub.embedding, sub.factor, opt_.tol);
        const auto chk = check_density(rho, opt_.tol);
        if(!chk.ok) throw CheckFailed("relational state is not a valid density operator");
        return {{"subsystem", sub.id},
                {"dimension", rho.dimension()},
                {"trace", rho.trace},
                {"trace_deficit", rho.trace_deficit},
                {"matrix", matrix_to_json(rho.matrix)},
                {"hermitian_deviation", chk.hermitian_deviation},
                {"min_eigenvalue", chk.min_eigenvalue}};
    }

    SpectralDecomposition decompose(const json &task, std::string *id = nullptr) const {
        const auto sub = select_subsystem(embedding(task), task);
        if(id) *id = sub.id;
        return possible_internal_states(relational_state(state(task), sub.embedding, sub.factor, opt_.tol), opt_.tol);
    }

    json spectrum(const json &task) const {
        const auto sub = select_subsystem(embedding(task), task);
        const auto rho = relational_state(state(task), sub.embedding, sub.factor, opt_.tol);
        const auto dec = possible_internal_states(rho, opt_.tol);
        json       out = spectrum_to_json(dec);
        out["subsystem"]            = sub.id;
        out["reconstruction_error"] = max_abs(dec.reconstruct() - rho.matrix);
        return out;
    }

    json schmidt(const json &task) const {
        const auto &e   = embedding(task).composed.joint;
        const auto &psi = state(task);
        const auto  sd  = schmidt_decompose(psi, e, opt_.tol);
        json        a   = json::array(), b = json::array();
        for(const auto &v : sd.a_vectors) a.push_back(vector_to_json(v.amplitudes));
        for(const auto &v : sd.b_vectors) b.push_back(vector_to_json(v.amplitudes));
        const Vector product = sd.rank() ? sd.product_part() : Vector::Zero(e.isometry.cols());
        const double err     = (psi.amplitudes - e.isometry * product - sd.residual.amplitudes).norm();
        if(!(err < opt_.tol.norm)) throw CheckFailed("Schmidt reconstruction error above tolerance");
        return {{"a", e.a_id},
                {"b", e.b_id},
                {"rank", sd.rank()},
                {"coefficients", sd.coefficients},
                {"a_vectors", a},
                {"b_vectors", b},
                {"degeneracy_groups", groups_to_json(sd.degeneracy_groups)},
                {"degenerate", sd.degenerate()},
                {"residual_norm_sq", sd.residual_norm_sq},
                {"reconstruction_error", err}};
    }

    json joint(const json &task) const {
        const auto &c   = embedding(task).composed;
        const auto &psi = state(task);
        std::vector<SpectralDecomposition> spectra;
        for(std::size_t i = 0; i < c.factor_count(); ++i)
            spectra.push_back(possible_internal_states(relational_state(psi, factor_embedding(c, i), Factor::a, opt_.tol), opt_.tol));
        const auto jd = joint_distribution(psi, c, spectra, opt_.tol);
        if(!(jd.marginal_deviation < 1e-9)) throw CheckFailed("joint distribution marginals disagree with lower-order distributions");
        json marginals = json::array();
        for(const auto &s : spectra) marginals.push_back(s.eigenvalues);
        return {{"subsystems", jd.subsystem_ids},
                {"index_ranges", jd.index_ranges},
                {"probabilities", jd.probabilities},
                {"total", jd.total},
                {"marginal_deviation", jd.marginal_deviation},
                {"degenerate", jd.degenerate},
                {"single_factor_spectra", marginals}};
    }

    json evolve_task(const json &task) {
        const auto &h   = hamiltonian(task);
        const auto  t   = field(task, "t", "evolve").get<double>();
        const auto  psi = evolve(state(task), h, t, opt_.tol);
        const double norm = psi.amplitudes.norm();
        if(!(std::abs(norm - 1.0) < opt_.tol.evolve)) throw CheckFailed("norm drift above tolerance");
        json out{{"t", t}, {"norm", norm}, {"energy", expectation(h.assembled.matrix, psi.amplitudes)}, {"state", vector_to_json(psi.amplitudes)}};
        if(task.contains("store_as")) {
            const auto name   = task.at("store_as").get<std::string>();
            states_[name]     = psi;
            out["stored_as"]  = name;
        }
        return out;
    }

    json trajectory(const json &task) const {
        const auto &e    = embedding(task).composed.joint;
        const auto &h    = hamiltonian(task);
        const auto  traj = trace_deficit_trajectory(state(task), h, e, task_times(task), opt_.tol);
        std::vector<double> trace, deficit, norm, energy;
        for(const auto &m : traj.monitors) {
            trace.push_back(m.relational_traces.at(e.a_id));
            deficit.push_back(1.0 - trace.back());
            norm.push_back(m.norm);
            energy.push_back(m.energy);
            if(!(std::abs(m.norm - 1.0) < opt_.tol.evolve)) throw CheckFailed("norm drift above tolerance");
        }
        return {{"subsystem", e.a_id}, {"times", traj.times}, {"trace", trace}, {"trace_deficit", deficit}, {"norm", norm}, {"energy", energy}};
    }

    json check_ssr(const json &task) const {
        const auto &ne = embedding(task);
        const auto  sub = select_subsystem(ne, task);
        const auto  kind = parse_charge_kind(task.value("charge", std::string("electric")));
        if(sub.factor != Factor::a) throw InvalidArgument("check-ssr takes a factor subsystem, not the complement");
        json out{{"subsystem", sub.id}, {"charge", std::string(to_string(kind))}};
        if(!sub.space) {
            out.update({{"status", "not_applicable"}, {"message", "not applicable: embedding has no mode structure"}});
            return out;
        }
        const auto &r   = s_.spaces.at(ne.reference);
        const auto  rep = check_superselection(state(task), sub.embedding, *sub.space, *sub.rest, r, kind, opt_.tol);
        out.update({{"status", std::string(to_string(rep.status))},
                    {"premise_holds", rep.premise_holds},
                    {"embedding_compatible", rep.embedding_compatible},
                    {"compatibility_deviation", rep.compatibility_deviation},
                    {"max_off_block", rep.max_off_block},
                    {"message", rep.message}});
        out["reference_charge"] = rep.reference_charge ? json(*rep.reference_charge) : json(nullptr);
        if(rep.status == CheckStatus::fail && rep.premise_holds) throw CheckFailed(rep.message + " (max off-block " + std::to_string(rep.max_off_block) + ")");
        return out;
    }

    json check_isolated(const json &task) const {
        const auto sub = select_subsystem(embedding(task), task);
        if(sub.factor != Factor::a) throw InvalidArgument("check-isolated takes a factor subsystem, not the complement");
        const auto rep = check_isolated_independence(state(task), sub.embedding, opt_.tol);
        if(rep.status == CheckStatus::fail) throw CheckFailed(rep.message);
        return {{"subsystem", sub.id},
                {"status", std::string(to_string(rep.status))},
                {"rank", rep.rank},
                {"trace_deficit", rep.trace_deficit},
                {"deviation", rep.deviation},
                {"message", rep.message}};
    }

    json sample(const json &task, std::size_t index) const {
        std::string id;
        const auto  dec   = decompose(task, &id);
        const auto  seed  = task.contains("seed") ? task.at("seed").get<std::uint64_t>() : mix_seed(opt_.seed + index);
        const auto  count = task.value("count", std::size_t{1});
        const auto  draws = sample_internal_states(dec, seed, count);
        std::map<std::string, std::size_t> counts;
        json outcomes = json::array();
        for(const auto &o : draws) {
            ++counts[outcome_label(o)];
            if(count <= 64) outcomes.push_back(outcome_label(o));
        }
        json out{{"subsystem", id},
                 {"seed", seed},
                 {"count", count},
                 {"probabilities", dec.eigenvalues},
                 {"annihilation_probability", dec.annihilation_probability},
                 {"counts", counts}};
        if(count <= 64) out["outcomes"] = outcomes;
        return out;
    }

    const Scenario                    &s_;
    const RunOptions                  &opt_;
    std::map<std::string, StateVector> states_;
};

} // namespace detail

inline json tolerances_to_json(const Tolerances &t) {
    return {{"norm", t.norm},     {"herm", t.herm},         {"psd", t.psd},
            {"ssr", t.ssr},       {"degen", t.degen},       {"zero_eig", t.zero_eig},
            {"zero_schmidt", t.zero_schmidt}, {"evolve", t.evolve}};
}

/// Runs every task in order. Task errors are recorded in the report and do
/// not stop later tasks.
inline json run_scenario(const Scenario &s, const RunOptions &opt = {}) {
    detail::TaskRunner runner(s, opt);
    json               tasks  = json::array();
    std::size_t        failed = 0;
    for(std::size_t i = 0; i < s.tasks.size(); ++i) {
        const auto &task = s.tasks[i];
        json        entry{{"index", i}, {"command", task.at("command")}};
        if(task.contains("label")) entry["label"] = task.at("label");
        try {
            entry["result"] = runner.run(task, i);
            entry["status"] = "ok";
        } catch(const CheckFailed &e) {
            entry["status"] = "check_failed";
            entry["error"]  = e.what();
            ++failed;
        } catch(const Error &e) {
            entry["status"] = "error";
            entry["error"]  = e.what();
            ++failed;
        } catch(const json::exception &e) {
            entry["status"] = "error";
            entry["error"]  = std::string("malformed task: ") + e.what();
            ++failed;
        }
        tasks.push_back(std::move(entry));
    }
    return {{"schema", "relmodal-report"},
            {"schema_version", report_schema_version},
            {"library_version", std::string(version)},
            {"scenario_digest", s.digest},
            {"tolerances", tolerances_to_json(opt.tol)},
            {"seed", opt.seed},
            {"tasks", tasks},
            {"summary", {{"tasks", s.tasks.size()}, {"failed", failed}}}};
}

inline bool report_ok(const json &report) { return report.at("summary").at("failed").get<std::size_t>() == 0; }

inline std::string render_machine(const json &report) { return report.dump(2) + "\n"; }

namespace detail {

inline std::string fmt(double x) {
    std::ostringstream out;
    out << std::setprecision(10) << x;
    return out.str();
}

inline std::string fmt_list(const json &values) {
    std::string out = "[";
    for(std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + fmt(values[i].get<double>());
    return out + "]";
}

} // namespace detail

inline std::string render_text(const json &report) {
    std::ostringstream out;
    out << "relmodal " << report.at("library_version").get<std::string>() << "  scenario " << report.at("scenario_digest").get<std::string>()
        << "  seed " << report.at("seed").get<std::uint64_t>() << "\n";
    for(const auto &t : report.at("tasks")) {
        out << "[" << t.at("index").get<std::size_t>() << "] " << t.at("command").get<std::string>();
        if(t.contains("label")) out << " (" << t.at("label").get<std::string>() << ")";
        out << ": " << t.at("status").get<std::string>() << "\n";
        if(t.contains("error")) {
            out << "    " << t.at("error").get<std::string>() << "\n";
            continue;
        }
        const auto &r       = t.at("result");
        const auto  command = t.at("command").get<std::string>();
        if(command == "reduce")
            out << "    " << r.at("subsystem").get<std::string>() << ": dim " << r.at("dimension") << ", trace " << detail::fmt(r.at("trace"))
                << ", deficit " << detail::fmt(r.at("trace_deficit")) << "\n";
        else if(command == "spectrum" || command == "sample") {
            out << "    " << r.at("subsystem").get<std::string>() << ": eigenvalues "
                << detail::fmt_list(r.contains("eigenvalues") ? r.at("eigenvalues") : r.at("probabilities")) << ", annihilation "
                << detail::fmt(r.at("annihilation_probability")) << "\n";
            if(command == "sample") {
                out << "    counts";
                for(const auto &[k, v] : r.at("counts").items()) out << " " << k << "=" << v;
                out << "\n";
            }
        } else if(command == "schmidt")
            out << "    rank " << r.at("rank") << ", coefficients " << detail::fmt_list(r.at("coefficients")) << ", residual "
                << detail::fmt(r.at("residual_norm_sq")) << "\n";
        else if(command == "joint")
            out << "    probabilities " << detail::fmt_list(r.at("probabilities")) << ", total " << detail::fmt(r.at("total")) << "\n";
        else if(command == "evolve")
            out << "    t " << detail::fmt(r.at("t")) << ", norm " << detail::fmt(r.at("norm")) << ", energy " << detail::fmt(r.at("energy")) << "\n";
        else if(command == "trace-trajectory")
            out << "    " << r.at("times").size() << " samples, deficit " << detail::fmt_list(r.at("trace_deficit")) << "\n";
        else if(command == "check-ssr" || command == "check-isolated")
            out << "    " << r.at("status").get<std::string>() << ": " << r.at("message").get<std::string>() << "\n";
    }
    out << report.at("summary").at("failed").get<std::size_t>() << " of " << report.at("summary").at("tasks").get<std::size_t>() << " tasks failed\n";
    return out.str();
}

} // namespace relmodal::cli

#endif

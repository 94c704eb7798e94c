#ifndef RELMODAL_CLI_SCENARIO_HPP
#define RELMODAL_CLI_SCENARIO_HPP

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../relmodal.hpp"

namespace relmodal::cli {

using json = nlohmann::json;

inline constexpr int scenario_schema_version = 1;

/// Raised while reading or validating a scenario; maps to exit status 2.
class LoadError : public Error {
  public:
    using Error::Error;
};

struct NamedEmbedding {
    std::string            name;
    std::string            reference;
    ComposedEmbedding      composed;
    std::vector<FockSpace> factor_spaces; // empty for explicit isometries
    std::optional<FockSpace> complement_space;
};

struct Scenario {
    std::map<std::string, FockSpace>       spaces;
    std::map<std::string, StateVector>     states;
    std::map<std::string, NamedEmbedding>  embeddings;
    std::map<std::string, HamiltonianSpec> hamiltonians;
    std::vector<json>                      tasks;
    std::string                            digest;
};

/// FNV-1a 64 of the raw scenario bytes, hex encoded.
inline std::string fnv1a_digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for(unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << "fnv1a64:" << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json vector_to_json(const Vector &v) {
    json out = json::array();
    for(Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
    return out;
}

inline json matrix_to_json(const Matrix &m) {
    json out = json::array();
    for(Index i = 0; i < m.rows(); ++i) out.push_back(vector_to_json(m.row(i).transpose()));
    return out;
}

namespace detail {

inline std::string where(const std::string &kind, const std::string &name) { return kind + " '" + name + "'"; }

inline const json &field(const json &obj, const char *key, const std::string &context) {
    if(!obj.is_object() || !obj.contains(key)) throw LoadError(context + ": missing field '" + key + "'");
    return obj.at(key);
}

inline cplx parse_complex(const json &j, const std::string &context) {
    if(j.is_number()) return {j.get<double>(), 0.0};
    if(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
    throw LoadError(context + ": complex numbers are [re, im] pairs");
}

inline Vector parse_vector(const json &j, const std::string &context) {
    if(!j.is_array()) throw LoadError(context + ": expected an array of complex numbers");
    Vector v(static_cast<Index>(j.size()));
    for(std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = parse_complex(j[i], context);
    return v;
}

inline Matrix parse_matrix(const json &j, const std::string &context) {
    if(!j.is_array() || j.empty()) throw LoadError(context + ": expected a nonempty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix            m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for(std::size_t r = 0; r < j.size(); ++r) {
        const Vector row = parse_vector(j[r], context);
        if(static_cast<std::size_t>(row.size()) != cols) throw LoadError(context + ": ragged matrix rows");
        m.row(static_cast<Index>(r)) = row.transpose();
    }
    return m;
}

template <typename T>
const T &lookup(const std::map<std::string, T> &table, const json &ref, const char *kind, const std::string &context) {
    if(!ref.is_string()) throw LoadError(context + ": " + kind + " reference must be a name");
    auto it = table.find(ref.get<std::string>());
    if(it == table.end()) throw LoadError(context + ": undefined " + kind + " '" + ref.get<std::string>() + "'");
    return it->second;
}

inline std::vector<std::string> string_list(const json &j, const std::string &context) {
    if(!j.is_array()) throw LoadError(context + ": expected a list of mode labels");
    std::vector<std::string> out;
    for(const auto &x : j) {
        if(!x.is_string()) throw LoadError(context + ": mode labels are strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

inline FockSpace parse_space(const json &j) {
    const std::string name    = field(j, "name", "space").get<std::string>();
    const std::string context = where("space", name);
    std::vector<ModeSpec> modes;
    for(const auto &m : field(j, "modes", context)) {
        ModeSpec spec;
        spec.label            = field(m, "label", context).get<std::string>();
        const std::string st  = m.value("statistics", std::string("boson"));
        if(st == "boson")
            spec.statistics = Statistics::boson;
        else if(st == "fermion")
            spec.statistics = Statistics::fermion;
        else
            throw LoadError(context + ": unknown statistics '" + st + "'");
        spec.max_occupation = m.value("max_occupation", 1);
        if(m.contains("charges"))
            for(const auto &[kind, q] : m.at("charges").items()) {
                try {
                    spec.charges[parse_charge_kind(kind)] = q.get<long long>();
                } catch(const InvalidArgument &e) { throw LoadError(context + ": " + e.what()); }
            }
        modes.push_back(std::move(spec));
    }
    try {
        return build_fock_space(name, std::move(modes));
    } catch(const Error &e) { throw LoadError(context + ": " + e.what()); }
}

inline Occupation occupation_of(const FockSpace &space, const json &j, const std::string &context) {
    Occupation occ(space.mode_count(), 0);
    if(j.is_array()) {
        if(j.size() != space.mode_count()) throw LoadError(context + ": occupation tuple has wrong length");
        for(std::size_t m = 0; m < j.size(); ++m) occ[m] = j[m].get<int>();
    } else if(j.is_object()) {
        for(const auto &[label, n] : j.items()) {
            auto m = space.find_mode(label);
            if(!m) throw LoadError(context + ": unknown mode '" + label + "'");
            occ[*m] = n.get<int>();
        }
    } else
        throw LoadError(context + ": occupation must be a list or a {mode: n} object");
    return occ;
}

inline StateVector parse_state(const json &j, const std::map<std::string, FockSpace> &spaces, const Tolerances &tol) {
    const std::string name    = field(j, "name", "state").get<std::string>();
    const std::string context = where("state", name);
    const FockSpace  &space   = lookup(spaces, field(j, "space", context), "space", context);
    Vector            v       = Vector::Zero(space.dimension());
    try {
        if(j.contains("amplitudes")) {
            v = parse_vector(j.at("amplitudes"), context);
            if(v.size() != space.dimension()) throw LoadError(context + ": amplitude list length differs from dim(" + space.id() + ")");
        } else if(j.contains("basis")) {
            v(space.index_of(occupation_of(space, j.at("basis"), context))) = 1.0;
        } else if(j.contains("bell") || j.contains("ghz")) {
            // (|0..0> + |1..1>)/sqrt(2) on the listed modes, other modes empty
            const auto labels = string_list(j.contains("bell") ? j.at("bell") : j.at("ghz"), context);
            if(j.contains("bell") && labels.size() != 2) throw LoadError(context + ": bell takes exactly two modes");
            Occupation lo(space.mode_count(), 0), hi = lo;
            for(const auto &l : labels) hi[space.mode_index(l)] = 1;
            v(space.index_of(lo)) = 1.0 / std::sqrt(2.0);
            v(space.index_of(hi)) = 1.0 / std::sqrt(2.0);
        } else if(j.contains("random")) {
            Rng rng(field(j.at("random"), "seed", context).get<std::uint64_t>());
            v = random_unit_vector(space.dimension(), rng);
        } else if(j.contains("terms")) {
            for(const auto &t : j.at("terms"))
                v(space.index_of(occupation_of(space, field(t, "occupation", context), context))) += parse_complex(field(t, "amplitude", context), context);
        } else
            throw LoadError(context + ": no constructor (amplitudes, basis, bell, ghz, random, terms)");
    } catch(const LoadError &) {
        throw;
    } catch(const Error &e) { throw LoadError(context + ": " + e.what()); }
    if(j.value("normalize", false)) {
        if(v.norm() == 0.0) throw LoadError(context + ": cannot normalize the zero vector");
        v /= v.norm();
    }
    StateVector psi{space.id(), v};
    try {
        require_unit_norm(psi, tol, context.c_str());
    } catch(const ValidationError &e) { throw LoadError(e.what()); }
    return psi;
}

inline NamedEmbedding parse_embedding(const json &j, const std::map<std::string, FockSpace> &spaces, const Tolerances &tol) {
    const std::string name    = field(j, "name", "embedding").get<std::string>();
    const std::string context = where("embedding", name);
    const FockSpace  &r       = lookup(spaces, field(j, "reference", context), "space", context);
    NamedEmbedding    out;
    out.name      = name;
    out.reference = r.id();
    try {
        if(j.contains("factors")) {
            std::vector<std::vector<std::string>> groups;
            for(const auto &g : j.at("factors")) groups.push_back(string_list(g, context));
            std::vector<std::string> ids;
            if(j.contains("factor_names"))
                ids = string_list(j.at("factor_names"), context);
            else
                for(std::size_t k = 0; k < groups.size(); ++k) ids.push_back(name + "." + std::to_string(k));
            const auto complement    = j.contains("complement") ? string_list(j.at("complement"), context) : std::vector<std::string>{};
            auto       part          = compose_embeddings(r, groups, complement, ids, j.value("complement_name", name + ".rest"), tol);
            out.composed             = std::move(part.composed);
            out.factor_spaces        = std::move(part.factors);
            out.complement_space     = std::move(part.complement);
        } else if(j.contains("isometry")) {
            Matrix             v    = parse_matrix(j.at("isometry"), context);
            std::vector<Index> dims = field(j, "factor_dims", context).get<std::vector<Index>>();
            const Index        dim_b = j.value("complement_dim", Index{1});
            std::vector<std::string> ids;
            if(j.contains("factor_names"))
                ids = string_list(j.at("factor_names"), context);
            else
                for(std::size_t k = 0; k < dims.size(); ++k) ids.push_back(name + "." + std::to_string(k));
            Index dim_a = 1;
            for(auto d : dims) dim_a *= d;
            if(v.rows() != r.dimension()) throw LoadError(context + ": isometry rows differ from dim(" + r.id() + ")");
            Embedding joint = make_embedding(ids.size() == 1 ? ids[0] : relmodal::detail::join_ids(ids), j.value("complement_name", name + ".rest"),
                                             r.id(), dim_a, dim_b, std::move(v));
            out.composed = make_composed(std::move(joint), ids, dims, tol);
        } else
            throw LoadError(context + ": needs 'factors' (mode partition) or 'isometry'");
    } catch(const LoadError &) {
        throw;
    } catch(const Error &e) { throw LoadError(context + ": " + e.what()); }
    return out;
}

inline HamiltonianSpec parse_hamiltonian(const json &j, const std::map<std::string, FockSpace> &spaces, const Tolerances &tol) {
    const std::string name    = field(j, "name", "hamiltonian").get<std::string>();
    const std::string context = where("hamiltonian", name);
    const FockSpace  &space   = lookup(spaces, field(j, "space", context), "space", context);
    std::vector<HamiltonianTerm> terms;
    if(j.contains("terms"))
        for(const auto &t : j.at("terms")) {
            HamiltonianTerm term;
            term.coefficient = field(t, "coefficient", context).get<double>();
            for(const auto &op : field(t, "ops", context)) {
                if(!op.is_array() || op.size() != 2) throw LoadError(context + ": ops are [kind, mode] pairs");
                const auto kind = op[0].get<std::string>();
                OpFactor   f;
                f.mode = op[1].get<std::string>();
                if(kind == "create")
                    f.kind = OpFactor::Kind::create;
                else if(kind == "annihilate")
                    f.kind = OpFactor::Kind::annihilate;
                else if(kind == "number")
                    f.kind = OpFactor::Kind::number;
                else
                    throw LoadError(context + ": unknown operator kind '" + kind + "'");
                term.factors.push_back(std::move(f));
            }
            terms.push_back(std::move(term));
        }
    if(j.contains("families"))
        for(const auto &f : j.at("families")) {
            const auto family = field(f, "family", context).get<std::string>();
            std::vector<HamiltonianTerm> extra;
            if(family == "free") {
                std::vector<std::pair<std::string, double>> omega;
                for(const auto &[mode, w] : field(f, "omega", context).items()) omega.emplace_back(mode, w.get<double>());
                extra = free_terms(omega);
            } else if(family == "trilinear") {
                const auto modes = string_list(field(f, "modes", context), context);
                if(modes.size() != 3) throw LoadError(context + ": trilinear takes three modes");
                extra = trilinear_terms(modes[0], modes[1], modes[2], field(f, "g", context).get<double>());
            } else if(family == "hopping") {
                const auto modes = string_list(field(f, "modes", context), context);
                if(modes.size() != 2) throw LoadError(context + ": hopping takes two modes");
                extra = hopping_terms(modes[0], modes[1], field(f, "t", context).get<double>());
            } else
                throw LoadError(context + ": unknown family '" + family + "'");
            terms.insert(terms.end(), extra.begin(), extra.end());
        }
    try {
        return build_hamiltonian(space, std::move(terms), tol);
    } catch(const Error &e) { throw LoadError(context + ": " + e.what()); }
}

inline void check_task_references(const json &task, std::size_t index, const Scenario &s) {
    const std::string context = "task " + std::to_string(index);
    if(!task.is_object() || !task.contains("command") || !task.at("command").is_string()) throw LoadError(context + ": missing command");
    const auto check = [&](const char *key, auto &table, const char *kind, bool required) {
        if(!task.contains(key)) {
            if(required) throw LoadError(context + " (" + task.at("command").get<std::string>() + "): missing field '" + key + "'");
            return;
        }
        lookup(table, task.at(key), kind, context);
    };
    static const std::map<std::string, std::vector<std::string>> needs{
        {"reduce", {"state", "embedding"}},          {"spectrum", {"state", "embedding"}}, {"schmidt", {"state", "embedding"}},
        {"joint", {"state", "embedding"}},           {"evolve", {"state", "hamiltonian"}}, {"trace-trajectory", {"state", "hamiltonian", "embedding"}},
        {"check-ssr", {"state", "embedding"}},       {"sample", {"state", "embedding"}},   {"check-isolated", {"state", "embedding"}}};
    const auto command = task.at("command").get<std::string>();
    auto       it      = needs.find(command);
    if(it == needs.end()) throw LoadError(context + ": unknown command '" + command + "'");
    for(const auto &key : it->second) {
        if(key == "state") {
            // states stored by earlier evolve tasks are resolved at run time
            if(!task.contains("state")) throw LoadError(context + ": missing field 'state'");
            continue;
        }
        if(key == "embedding") check("embedding", s.embeddings, "embedding", true);
        if(key == "hamiltonian") check("hamiltonian", s.hamiltonians, "hamiltonian", true);
    }
}

} // namespace detail

/// Parses and validates a scenario document. Every name reference must
/// resolve; embeddings must be isometries, Hamiltonians Hermitian and
/// states normalized.
inline Scenario load_scenario_text(const std::string &text, const Tolerances &tol = {}) {
    json doc;
    try {
        doc = json::parse(text);
    } catch(const json::parse_error &e) {
        std::size_t line = 1, column = 1;
        for(std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if(text[i] == '\n') {
                ++line;
                column = 1;
            } else
                ++column;
        }
        throw LoadError("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what());
    }
    if(!doc.is_object()) throw LoadError("scenario must be a JSON object");
    if(doc.value("schema_version", 0) != scenario_schema_version)
        throw LoadError("unsupported scenario schema_version (expected " + std::to_string(scenario_schema_version) + ")");

    Scenario s;
    s.digest = fnv1a_digest(text);
    try {
        for(const auto &j : doc.value("spaces", json::array())) {
            auto space = detail::parse_space(j);
            if(!s.spaces.emplace(space.id(), space).second) throw LoadError("duplicate space '" + space.id() + "'");
        }
        for(const auto &j : doc.value("states", json::array())) {
            const auto name = detail::field(j, "name", "state").get<std::string>();
            if(!s.states.emplace(name, detail::parse_state(j, s.spaces, tol)).second) throw LoadError("duplicate state '" + name + "'");
        }
        for(const auto &j : doc.value("embeddings", json::array())) {
            auto e = detail::parse_embedding(j, s.spaces, tol);
            if(!s.embeddings.emplace(e.name, e).second) throw LoadError("duplicate embedding '" + e.name + "'");
        }
        for(const auto &j : doc.value("hamiltonians", json::array())) {
            const auto name = detail::field(j, "name", "hamiltonian").get<std::string>();
            if(!s.hamiltonians.emplace(name, detail::parse_hamiltonian(j, s.spaces, tol)).second) throw LoadError("duplicate hamiltonian '" + name + "'");
        }
        for(const auto &j : doc.value("tasks", json::array())) {
            detail::check_task_references(j, s.tasks.size(), s);
            s.tasks.push_back(j);
        }
    } catch(const json::exception &e) { throw LoadError(std::string("malformed scenario: ") + e.what()); }
    return s;
}

inline std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if(!in) throw LoadError("cannot read scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline Scenario load_scenario(const std::string &path, const Tolerances &tol = {}) { return load_scenario_text(read_file(path), tol); }

} // namespace relmodal::cli

#endif

// experiment.hpp: named presets, config resolution and the runner that writes
// series.csv, sweep.csv, revivals.csv, qgrid_<tag>.csv and meta.txt.

#pragma once

#include "tcm/dynamics.hpp"
#include "tcm/hilbert.hpp"
#include "tcm/largen.hpp"
#include "tcm/measures.hpp"
#include "tcm/settings.hpp"
#include "tcm/types.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tcm {

enum class Engine { exact, largen };
enum class BasisChoice { full, symmetric, automatic };
enum class RunMode { series, basin_sweep, revival_scan };

class UnknownPresetError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// ground | excited | attractor_plus | attractor_minus | product | dicke | basin | spin_coherent
struct InitialSpec {
    std::string kind = "ground";
    std::vector<cplx> amplitudes;  // product (2^N) or Dicke (N+1, r = N/2 - m)
    bool normalize = false;
    cplx a = 0.0;  // basin
    cplx z = 0.0;  // spin_coherent
};

struct ExperimentConfig {
    std::string preset = "custom";
    std::string description;
    RunMode mode = RunMode::series;
    ModelConfig model;
    InitialSpec state;
    Engine engine = Engine::exact;
    BasisChoice basis = BasisChoice::full;
    double t_start = 0.0;  // units of t_r
    double t_end = 1.0;
    int points = 0;  // 0 -> 2000 per t_r, plus one
    std::vector<std::string> observables;
    std::vector<double> q_times;
    int q_points = 201;
    std::optional<double> q_half_width;  // unset -> sqrt(nbar) + 4
    std::vector<double> spin_q_times;
    int spin_q_points = 201;
    double spin_q_half_width = 3.0;
    int sweep_points = 401;
    std::string sweep_axis = "real";
    int scan_max_qubits = 5;
    double scan_threshold = 0.01;

    int resolved_points() const {
        if (points > 0) return points;
        return std::max(2, static_cast<int>(std::lround(2000.0 * (t_end - t_start))) + 1);
    }

    std::vector<double> times_over_tr() const {
        return TimeGrid{t_start, t_end, resolved_points()}.values();
    }

    double field_half_width() const { return q_half_width.value_or(std::sqrt(model.nbar) + 4.0); }
};

// --------------------------- names ---------------------------------------------

inline const std::vector<std::string>& known_observables() {
    static const std::vector<std::string> names = {"entropy",  "entropy_field", "p_g",         "p_att_plus",
                                                   "p_att_minus", "p_init",     "tangle",      "concurrence",
                                                   "raw_tangle", "pair_tangles", "norm",       "excitation",
                                                   "leakage"};
    return names;
}

inline std::string to_string(Engine e) { return e == Engine::exact ? "exact" : "largen"; }
inline std::string to_string(BasisChoice b) {
    switch (b) {
        case BasisChoice::full: return "full";
        case BasisChoice::symmetric: return "symmetric";
        default: return "auto";
    }
}
inline std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::series: return "series";
        case RunMode::basin_sweep: return "basin_sweep";
        default: return "revival_scan";
    }
}

// --------------------------- settings -> config --------------------------------

namespace detail {

inline std::string join(const std::vector<std::string>& items, const char* sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

inline std::string join_numbers(const std::vector<double>& xs) {
    std::vector<std::string> s;
    for (double x : xs) s.push_back(format_number(x));
    return join(s);
}

inline std::string join_complex(const std::vector<cplx>& zs) {
    std::vector<std::string> s;
    for (cplx z : zs) s.push_back(format_complex(z));
    return join(s);
}

}  // namespace detail

inline ExperimentConfig config_from_settings(const Settings& s) {
    ExperimentConfig c;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"preset", [&](auto&, auto& v) { c.preset = v; }},
        {"description", [&](auto&, auto& v) { c.description = v; }},
        {"mode",
         [&](auto& k, auto& v) {
             if (v == "series") c.mode = RunMode::series;
             else if (v == "basin_sweep") c.mode = RunMode::basin_sweep;
             else if (v == "revival_scan") c.mode = RunMode::revival_scan;
             else throw ConfigError(k + ": expected series, basin_sweep or revival_scan");
         }},
        {"n_qubits", [&](auto& k, auto& v) { c.model.n_qubits = parse_int(v, k); }},
        {"coupling", [&](auto& k, auto& v) { c.model.coupling = parse_double(v, k); }},
        {"nbar", [&](auto& k, auto& v) { c.model.nbar = parse_double(v, k); }},
        {"theta", [&](auto& k, auto& v) { c.model.theta = parse_double(v, k); }},
        {"fock_cutoff",
         [&](auto& k, auto& v) {
             if (v == "auto") c.model.fock_cutoff.reset();
             else c.model.fock_cutoff = parse_int(v, k);
         }},
        {"state", [&](auto&, auto& v) { c.state.kind = v; }},
        {"state.amplitudes", [&](auto& k, auto& v) { c.state.amplitudes = parse_complex_list(v, k); }},
        {"state.normalize", [&](auto& k, auto& v) { c.state.normalize = parse_bool(v, k); }},
        {"state.a", [&](auto& k, auto& v) { c.state.a = parse_complex(v, k); }},
        {"state.z", [&](auto& k, auto& v) { c.state.z = parse_complex(v, k); }},
        {"engine",
         [&](auto& k, auto& v) {
             if (v == "exact") c.engine = Engine::exact;
             else if (v == "largen") c.engine = Engine::largen;
             else throw ConfigError(k + ": expected exact or largen");
         }},
        {"basis",
         [&](auto& k, auto& v) {
             if (v == "full") c.basis = BasisChoice::full;
             else if (v == "symmetric") c.basis = BasisChoice::symmetric;
             else if (v == "auto") c.basis = BasisChoice::automatic;
             else throw ConfigError(k + ": expected full, symmetric or auto");
         }},
        {"t_start", [&](auto& k, auto& v) { c.t_start = parse_double(v, k); }},
        {"t_end", [&](auto& k, auto& v) { c.t_end = parse_double(v, k); }},
        {"points", [&](auto& k, auto& v) { c.points = v == "auto" ? 0 : parse_int(v, k); }},
        {"observables", [&](auto& k, auto& v) {
             c.observables = split_list(v);
             const auto& known = known_observables();
             for (const auto& o : c.observables)
                 if (std::find(known.begin(), known.end(), o) == known.end())
                     throw ConfigError(k + ": unknown observable '" + o + "' (known: " + detail::join(known, ", ") + ")");
         }},
        {"q_times", [&](auto& k, auto& v) { c.q_times = parse_double_list(v, k); }},
        {"q_points", [&](auto& k, auto& v) { c.q_points = parse_int(v, k); }},
        {"q_half_width",
         [&](auto& k, auto& v) {
             if (v == "auto") c.q_half_width.reset();
             else c.q_half_width = parse_double(v, k);
         }},
        {"spin_q_times", [&](auto& k, auto& v) { c.spin_q_times = parse_double_list(v, k); }},
        {"spin_q_points", [&](auto& k, auto& v) { c.spin_q_points = parse_int(v, k); }},
        {"spin_q_half_width", [&](auto& k, auto& v) { c.spin_q_half_width = parse_double(v, k); }},
        {"sweep.points", [&](auto& k, auto& v) { c.sweep_points = parse_int(v, k); }},
        {"sweep.axis",
         [&](auto& k, auto& v) {
             if (v != "real" && v != "imag") throw ConfigError(k + ": expected real or imag");
             c.sweep_axis = v;
         }},
        {"scan.max_qubits", [&](auto& k, auto& v) { c.scan_max_qubits = parse_int(v, k); }},
        {"scan.threshold", [&](auto& k, auto& v) { c.scan_threshold = parse_double(v, k); }},
    };
    for (const auto& [k, v] : s) {
        const auto it = setters.find(k);
        if (it == setters.end()) {
            std::vector<std::string> keys;
            for (const auto& entry : setters) keys.push_back(entry.first);
            throw ConfigError("unknown setting '" + k + "' (known: " + detail::join(keys, ", ") + ")");
        }
        it->second(k, v);
    }
    return c;
}

// Fully resolved echo; feeding it back through config_from_settings reproduces the config.
inline Settings to_settings(const ExperimentConfig& c) {
    Settings s;
    s["preset"] = c.preset;
    if (!c.description.empty()) s["description"] = c.description;
    s["mode"] = to_string(c.mode);
    s["n_qubits"] = std::to_string(c.model.n_qubits);
    s["coupling"] = format_number(c.model.coupling);
    s["nbar"] = format_number(c.model.nbar);
    s["theta"] = format_number(c.model.theta);
    s["fock_cutoff"] = c.model.fock_cutoff ? std::to_string(*c.model.fock_cutoff) : "auto";
    s["state"] = c.state.kind;
    if (!c.state.amplitudes.empty()) s["state.amplitudes"] = detail::join_complex(c.state.amplitudes);
    s["state.normalize"] = c.state.normalize ? "true" : "false";
    if (c.state.kind == "basin") s["state.a"] = format_complex(c.state.a);
    if (c.state.kind == "spin_coherent") s["state.z"] = format_complex(c.state.z);
    s["engine"] = to_string(c.engine);
    s["basis"] = to_string(c.basis);
    s["t_start"] = format_number(c.t_start);
    s["t_end"] = format_number(c.t_end);
    s["points"] = std::to_string(c.resolved_points());
    s["observables"] = detail::join(c.observables);
    s["q_times"] = detail::join_numbers(c.q_times);
    s["q_points"] = std::to_string(c.q_points);
    s["q_half_width"] = format_number(c.field_half_width());
    s["spin_q_times"] = detail::join_numbers(c.spin_q_times);
    s["spin_q_points"] = std::to_string(c.spin_q_points);
    s["spin_q_half_width"] = format_number(c.spin_q_half_width);
    s["sweep.points"] = std::to_string(c.sweep_points);
    s["sweep.axis"] = c.sweep_axis;
    s["scan.max_qubits"] = std::to_string(c.scan_max_qubits);
    s["scan.threshold"] = format_number(c.scan_threshold);
    return s;
}

// --------------------------- presets --------------------------------------------

struct Preset {
    std::string name;
    std::string description;
    Settings settings;
};

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> list = [] {
        const std::string two_q_obs = "entropy,p_g,p_att_plus,p_att_minus,p_init";
        const std::string conc_obs = "concurrence,tangle,raw_tangle,entropy";
        std::vector<Preset> p = {
            {"fig1", "one qubit from |g>, nbar = 50: entropy, P_g and attractor probabilities over two revivals",
             {{"n_qubits", "1"}, {"state", "ground"}, {"t_end", "2"},
              {"observables", "entropy,p_g,p_att_plus,p_att_minus"}}},
            {"fig2", "one qubit from |g>: field Q function at 0, t_r/8, t_r/2, just before t_r, 3t_r/2, 2t_r",
             {{"n_qubits", "1"}, {"state", "ground"}, {"t_end", "2"}, {"observables", "entropy,p_g"},
              {"q_times", "0,0.125,0.5,0.96,1.5,2"}}},
            {"fig4a", "two qubits from |gg>: entropy dip to about 0.35 near t_r/4",
             {{"n_qubits", "2"}, {"state", "ground"}, {"observables", two_q_obs}}},
            {"fig4b", "two qubits from (|ee>+|gg>)/sqrt2, inside the basin: attractor at t_r/4",
             {{"n_qubits", "2"}, {"state", "product"}, {"state.amplitudes", "1,0,0,1"}, {"state.normalize", "true"},
              {"observables", two_q_obs}}},
            {"fig5", "tangle of the two-qubit basin state against real a",
             {{"mode", "basin_sweep"}, {"n_qubits", "2"}}},
            {"fig6", "collapse and revival of entanglement from (|ee>+|gg>)/sqrt2",
             {{"n_qubits", "2"}, {"state", "product"}, {"state.amplitudes", "1,0,0,1"}, {"state.normalize", "true"},
              {"observables", "entropy,tangle,concurrence,raw_tangle,p_att_plus"}}},
            {"fig7a", "concurrence from sqrt(1/10)|ee> - sqrt(9/10)|gg>",
             {{"n_qubits", "2"}, {"state", "product"}, {"state.amplitudes", "1,0,0,-3"}, {"state.normalize", "true"},
              {"observables", conc_obs}}},
            {"fig7b", "concurrence from (|eg> + i|ge>)/sqrt2",
             {{"n_qubits", "2"}, {"state", "product"}, {"state.amplitudes", "0,1,0:1,0"},
              {"state.normalize", "true"}, {"observables", conc_obs}}},
            {"fig7c", "concurrence from sqrt(1/20)|ee> + sqrt(19/20)|gg>, sudden death",
             {{"n_qubits", "2"}, {"state", "product"}, {"state.amplitudes", "1,0,0,4.35889894354067355"},
              {"state.normalize", "true"}, {"observables", conc_obs}}},
            {"fig7d", "concurrence from (|eg> + e^{i pi/4}|ge>)/sqrt2",
             {{"n_qubits", "2"}, {"state", "product"},
              {"state.amplitudes", "0,1,0.707106781186547524:0.707106781186547524,0"}, {"state.normalize", "true"},
              {"observables", conc_obs}}},
            {"fig7e", "concurrence from (|ee> + |gg>)/sqrt2",
             {{"n_qubits", "2"}, {"state", "product"}, {"state.amplitudes", "1,0,0,1"}, {"state.normalize", "true"},
              {"observables", conc_obs}}},
            {"fig8", "three-tangle of the three-qubit basin state against real a",
             {{"mode", "basin_sweep"}, {"n_qubits", "3"}}},
            {"fig9a", "three qubits in the basin, a = 1/2 (a spin coherent product state)",
             {{"n_qubits", "3"}, {"state", "basin"}, {"state.a", "0.5"}, {"observables", "entropy,p_g,p_att_plus"}}},
            {"fig9b", "four qubits in the basin, a = 0: (|m=1> + |m=-1>)/sqrt2",
             {{"n_qubits", "4"}, {"state", "basin"}, {"state.a", "0"}, {"observables", "entropy,p_g,p_att_plus"}}},
            {"fig10", "40 qubits, basin a = 0: spin Q function of the spin cat at t = 0",
             {{"n_qubits", "40"}, {"state", "basin"}, {"state.a", "0"}, {"basis", "symmetric"}, {"t_end", "0.05"},
              {"points", "101"}, {"observables", "entropy,p_att_plus"}, {"spin_q_times", "0"}}},
            {"fig11", "40 qubits, basin a = 0, large-nbar engine: spin Q function at the attractor time t_r/80",
             {{"n_qubits", "40"}, {"state", "basin"}, {"state.a", "0"}, {"basis", "symmetric"}, {"engine", "largen"},
              {"t_end", "0.05"}, {"points", "101"}, {"observables", "entropy,p_att_plus,p_att_minus"},
              {"spin_q_times", "0.0125"}}},
            {"fig12", "three qubits from the GHZ-type basin state a = 0: entropy, P_init and pairwise tangles",
             {{"n_qubits", "3"}, {"state", "basin"}, {"state.a", "0"}, {"observables", "entropy,p_g,p_init,pair_tangles"}}},
            {"table1", "revival and attractor times for 1 to 5 qubits located in P_g and entropy",
             {{"mode", "revival_scan"}, {"t_end", "1.2"}, {"scan.max_qubits", "5"}}},
        };
        for (auto& preset : p) {
            preset.settings["preset"] = preset.name;
            preset.settings["description"] = preset.description;
        }
        return p;
    }();
    return list;
}

inline std::string preset_names() {
    std::vector<std::string> names;
    for (const auto& p : presets()) names.push_back(p.name);
    return detail::join(names, ", ");
}

inline const Preset& find_preset(std::string_view name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw UnknownPresetError("unknown preset '" + std::string(name) + "'; available: " + preset_names());
}

// preset < config file < command-line overrides
inline ExperimentConfig load_experiment(std::string preset, const Settings& file, const Settings& overrides) {
    if (preset.empty()) {
        if (auto it = overrides.find("preset"); it != overrides.end()) preset = it->second;
        else if (auto jt = file.find("preset"); jt != file.end()) preset = jt->second;
    }
    Settings merged;
    if (!preset.empty()) merged = find_preset(preset).settings;
    merge_into(merged, file);
    merge_into(merged, overrides);
    if (!preset.empty()) merged["preset"] = preset;
    return config_from_settings(merged);
}

inline std::string describe(std::string_view name) {
    const Preset& p = find_preset(name);
    return "# " + p.name + ": " + p.description + "\n" + render_settings(to_settings(config_from_settings(p.settings)));
}

// --------------------------- initial state --------------------------------------

struct InitialState {
    std::optional<QubitState> product;
    std::optional<DickeState> dicke;
};

namespace detail {

inline Vector to_vector(const std::vector<cplx>& xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v(static_cast<Eigen::Index>(i)) = xs[i];
    return v;
}

inline void check_norm(Vector& v, bool normalize) {
    const double n = v.norm();
    if (!(n > 0.0)) throw ConfigError("initial state has zero norm");
    if (normalize) v /= n;
    else if (std::abs(n - 1.0) > 1e-10)
        throw ConfigError("initial state is not normalised (norm " + format_number(n) +
                          "); set state.normalize = true to rescale");
}

}  // namespace detail

inline InitialState build_initial(const InitialSpec& spec, const ModelConfig& model) {
    const int n = model.n_qubits;
    if (n < 1) throw ConfigError("n_qubits must be >= 1");
    const bool product_ok = n <= kMaxProductQubits;
    InitialState out;
    auto fill_product = [&] {
        if (product_ok) out.product = to_product_basis(*out.dicke);
    };
    const std::string& kind = spec.kind;
    if (kind == "ground" || kind == "excited") {
        out.dicke = dicke_basis_vector(n, kind == "ground" ? -0.5 * n : 0.5 * n);
        fill_product();
    } else if (kind == "attractor_plus" || kind == "attractor_minus") {
        out.dicke = attractor_state_dicke(n, model.theta, kind == "attractor_plus" ? 1 : -1);
        fill_product();
    } else if (kind == "basin") {
        BasinSpec b{n, spec.a, model.theta};
        try {
            b.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid initial state: ") + e.what());
        }
        out.dicke = basin_dicke(b);
        fill_product();
    } else if (kind == "spin_coherent") {
        out.dicke = spin_coherent_dicke(spec.z, n);
        fill_product();
    } else if (kind == "dicke") {
        if (spec.amplitudes.size() != static_cast<std::size_t>(n + 1))
            throw ConfigError("state.amplitudes: Dicke state needs n_qubits + 1 entries");
        Vector v = detail::to_vector(spec.amplitudes);
        detail::check_norm(v, spec.normalize);
        out.dicke = DickeState(n, std::move(v));
        fill_product();
    } else if (kind == "product") {
        if (!product_ok) throw ConfigError("product-basis initial state limited to " + std::to_string(kMaxProductQubits) + " qubits");
        if (spec.amplitudes.size() != static_cast<std::size_t>(product_dim(n)))
            throw ConfigError("state.amplitudes: product state needs 2^n_qubits entries");
        Vector v = detail::to_vector(spec.amplitudes);
        detail::check_norm(v, spec.normalize);
        out.product = QubitState(n, std::move(v));
        if (is_symmetric(*out.product)) out.dicke = from_product_basis(*out.product);
    } else {
        throw ConfigError("unknown state kind '" + kind +
                          "' (ground, excited, attractor_plus, attractor_minus, product, dicke, basin, spin_coherent)");
    }
    return out;
}

// |beta_0| for one or two qubits, distance from the basin span otherwise.
struct BasinClassification {
    std::string measure;
    double value = 0.0;
    bool in_basin = false;
};

inline BasinClassification classify_basin(const InitialState& init, const ModelConfig& model) {
    const int n = model.n_qubits;
    if (n == 1) return {"beta0", 0.0, true};
    if (n == 2) {
        const QubitState q = init.product ? *init.product : to_product_basis(*init.dicke);
        const double b0 = std::abs(two_qubit_components(q, model, 0.0)[1].beta);
        return {"beta0", b0, b0 < kBasinTolerance};
    }
    const double r = init.dicke ? basin_residual(*init.dicke, model.theta) : basin_residual(*init.product, model.theta);
    return {"residual", r, r < kBasinTolerance};
}

// --------------------------- simulation -----------------------------------------

// Produces the joint state at any time, exactly or from the large-nbar components.
class Simulation {
public:
    Simulation(const ExperimentConfig& cfg) : model_(cfg.model), engine_(cfg.engine) {
        try {
            model_.validate();
        } catch (const TruncationError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        init_ = build_initial(cfg.state, model_);
        basis_ = choose_basis(cfg);
        if (engine_ == Engine::exact) {
            prop_.emplace(model_, basis_);
            initial_ = basis_ == QubitBasis::product ? embed_product(*init_.product, model_.field(), model_.n_max())
                                                    : embed_product(*init_.dicke, model_.field(), model_.n_max());
        } else {
            if (model_.n_qubits >= 3) {
                const auto cls = classify_basin(init_, model_);
                if (!cls.in_basin)
                    throw ConfigError("largen engine needs an in-basin initial state for 3 or more qubits (residual " +
                                      format_number(cls.value) + ")");
            }
            initial_ = assembled(0.0);
        }
    }

    const ModelConfig& model() const { return model_; }
    QubitBasis basis() const { return basis_; }
    Engine engine() const { return engine_; }
    const InitialState& initial() const { return init_; }
    const JointState& initial_joint() const { return initial_; }
    double max_assembly_defect() const { return max_defect_; }

    JointState state_at(double t) const {
        if (engine_ == Engine::exact) return prop_->evolve(initial_, t);
        return assembled(t);
    }

    // Calls f(t, state) for each time; the exact engine projects once.
    template <class F>
    void sweep(std::span<const double> times, F&& f) const {
        if (engine_ == Engine::exact) {
            (void)evolve_series(*prop_, initial_, times, [&](double t, const JointState& s) {
                f(t, s);
                return 0;
            });
            return;
        }
        for (double t : times) f(t, static_cast<const JointState&>(assembled(t)));
    }

    // Raw norm of the assembled large-nbar state before renormalisation.
    double last_raw_norm() const { return last_raw_norm_; }

private:
    QubitBasis choose_basis(const ExperimentConfig& cfg) const {
        const int n = model_.n_qubits;
        if (engine_ == Engine::largen && n <= 2) {
            if (!init_.product) throw ConfigError("largen engine for 1 or 2 qubits needs a product-basis state");
            return QubitBasis::product;
        }
        switch (cfg.basis) {
            case BasisChoice::full:
                if (!init_.product || n > kMaxProductQubits)
                    throw ConfigError("full basis limited to " + std::to_string(kMaxProductQubits) +
                                      " qubits; use basis = symmetric");
                return QubitBasis::product;
            case BasisChoice::symmetric:
                if (!init_.dicke) throw ConfigError("basis = symmetric needs a permutation-symmetric initial state");
                return QubitBasis::dicke;
            default:
                return init_.dicke ? QubitBasis::dicke : QubitBasis::product;
        }
    }

    JointState assembled(double t) const {
        const int n = model_.n_qubits;
        JointState js;
        double defect = 0.0;
        if (n == 1) {
            const auto& q = init_.product->amplitudes;
            auto a = assemble(one_qubit_components(q(0), q(1), model_, t), model_);
            js = std::move(a.state);
            defect = a.norm_defect;
        } else if (n == 2) {
            auto a = assemble(two_qubit_components(*init_.product, model_, t), model_);
            js = std::move(a.state);
            defect = a.norm_defect;
        } else if (basis_ == QubitBasis::dicke) {
            auto a = assemble(nq_extreme_components(*init_.dicke, model_, t), model_);
            js = std::move(a.state);
            defect = a.norm_defect;
        } else {
            auto a = assemble(nq_extreme_components(*init_.product, model_, t), model_);
            js = std::move(a.state);
            defect = a.norm_defect;
        }
        last_raw_norm_ = js.norm();
        max_defect_ = std::max(max_defect_, defect);
        js.amplitudes /= last_raw_norm_;
        return js;
    }

    ModelConfig model_;
    Engine engine_;
    InitialState init_;
    QubitBasis basis_ = QubitBasis::product;
    std::optional<Propagator> prop_;
    JointState initial_;
    mutable double max_defect_ = 0.0;
    mutable double last_raw_norm_ = 1.0;
};

// --------------------------- series ---------------------------------------------

struct SeriesTable {
    std::vector<std::string> columns;  // excludes the leading t_over_tr
    std::vector<double> t_over_tr;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(std::string_view name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw std::out_of_range("SeriesTable: no column " + std::string(name));
        const auto k = static_cast<std::size_t>(it - columns.begin());
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[k]);
        return out;
    }
};

struct Diagnostics {
    std::string basis;
    int n_max = 0;
    BasinClassification basin;
    double max_norm_drift = 0.0;
    double max_excitation_drift = std::numeric_limits<double>::quiet_NaN();
    double max_entropy_gap = std::numeric_limits<double>::quiet_NaN();
    double max_leakage = 0.0;
    double max_assembly_defect = std::numeric_limits<double>::quiet_NaN();
};

// Top-level Fock occupancy above this aborts a run.
inline constexpr double kLeakageGuard = 1e-8;

namespace detail {

inline void check_observables(const std::vector<std::string>& obs, int n_qubits) {
    std::set<std::string> seen;
    for (const auto& o : obs) {
        const auto& known = known_observables();
        if (std::find(known.begin(), known.end(), o) == known.end())
            throw ConfigError("unknown observable '" + o + "' (known: " + join(known, ", ") + ")");
        if (!seen.insert(o).second) throw ConfigError("observable '" + o + "' listed twice");
        if ((o == "tangle" || o == "concurrence" || o == "raw_tangle") && n_qubits != 2)
            throw ConfigError("observable '" + o + "' needs exactly 2 qubits");
        if (o == "pair_tangles" && (n_qubits < 3 || n_qubits > kMaxProductQubits))
            throw ConfigError("pair_tangles needs 3 to " + std::to_string(kMaxProductQubits) + " qubits");
    }
}

inline Vector in_basis(QubitBasis b, const DickeState& d) {
    return b == QubitBasis::dicke ? d.amplitudes : to_product_basis(d).amplitudes;
}

}  // namespace detail

inline std::pair<SeriesTable, Diagnostics> compute_series(const ExperimentConfig& cfg, const Simulation& sim) {
    const int n = cfg.model.n_qubits;
    detail::check_observables(cfg.observables, n);
    if (!(cfg.t_end > cfg.t_start)) throw ConfigError("t_end must exceed t_start");
    if (cfg.points == 1 || cfg.points < 0) throw ConfigError("points must be >= 2");

    const QubitBasis b = sim.basis();
    const Vector ground = detail::in_basis(b, dicke_basis_vector(n, -0.5 * n));
    const Vector att_plus = detail::in_basis(b, attractor_state_dicke(n, cfg.model.theta, 1));
    const Vector att_minus = detail::in_basis(b, attractor_state_dicke(n, cfg.model.theta, -1));
    const Vector init = b == QubitBasis::dicke ? sim.initial().dicke->amplitudes : sim.initial().product->amplitudes;

    SeriesTable table;
    for (const auto& o : cfg.observables) {
        if (o == "pair_tangles") {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) table.columns.push_back("pair_tangle_" + std::to_string(i) + std::to_string(j));
        } else {
            table.columns.push_back(o);
        }
    }

    Diagnostics diag;
    diag.basis = b == QubitBasis::dicke ? "symmetric" : "full";
    diag.n_max = cfg.model.n_max();
    diag.basin = classify_basin(sim.initial(), cfg.model);
    const bool exact = sim.engine() == Engine::exact;
    const double norm0 = sim.initial_joint().norm();
    const double excitation0 = excitation_expectation(sim.initial_joint());
    const bool want_gap = std::count(cfg.observables.begin(), cfg.observables.end(), "entropy") &&
                          std::count(cfg.observables.begin(), cfg.observables.end(), "entropy_field");
    if (exact) diag.max_excitation_drift = 0.0;
    if (want_gap) diag.max_entropy_gap = 0.0;

    const double t_r = cfg.model.revival_time();
    std::vector<double> times;
    for (double x : cfg.times_over_tr()) times.push_back(x * t_r);

    sim.sweep(times, [&](double t, const JointState& s) {
        const DensityMatrix rho = partial_trace_field(s);
        std::optional<TangleBreakdown> tb;
        std::optional<double> s_q, s_f;
        auto get_tangle = [&]() -> const TangleBreakdown& {
            if (!tb) tb = tangle(rho);
            return *tb;
        };
        auto get_sq = [&] {
            if (!s_q) s_q = entropy(rho, n);
            return *s_q;
        };
        auto get_sf = [&] {
            if (!s_f) s_f = entropy(partial_trace_qubits(s), n);
            return *s_f;
        };
        const double norm = exact ? s.norm() : sim.last_raw_norm();
        std::vector<double> row;
        for (const auto& o : cfg.observables) {
            if (o == "entropy") row.push_back(get_sq());
            else if (o == "entropy_field") row.push_back(get_sf());
            else if (o == "p_g") row.push_back(probability(rho, ground));
            else if (o == "p_att_plus") row.push_back(probability(rho, att_plus));
            else if (o == "p_att_minus") row.push_back(probability(rho, att_minus));
            else if (o == "p_init") row.push_back(probability(rho, init));
            else if (o == "tangle") row.push_back(get_tangle().tangle);
            else if (o == "concurrence") row.push_back(get_tangle().concurrence);
            else if (o == "raw_tangle") row.push_back(get_tangle().raw);
            else if (o == "norm") row.push_back(norm);
            else if (o == "excitation") row.push_back(excitation_expectation(s));
            else if (o == "leakage") row.push_back(s.top_level_occupancy());
            else if (o == "pair_tangles") {
                const DensityMatrix full = rho.side == Side::qubits_dicke ? to_product_basis(rho) : rho;
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j) row.push_back(tangle(reduce_qubits(full, {i, j})).tangle);
            }
        }
        if (exact) {
            diag.max_norm_drift = std::max(diag.max_norm_drift, std::abs(norm - norm0));
            diag.max_excitation_drift =
                std::max(diag.max_excitation_drift, std::abs(excitation_expectation(s) - excitation0));
        } else {
            diag.max_norm_drift = std::max(diag.max_norm_drift, std::abs(s.norm() - 1.0));
        }
        if (want_gap) diag.max_entropy_gap = std::max(diag.max_entropy_gap, std::abs(get_sq() - get_sf()));
        diag.max_leakage = std::max(diag.max_leakage, s.top_level_occupancy());
        table.t_over_tr.push_back(t / t_r);
        table.rows.push_back(std::move(row));
    });
    if (!exact) diag.max_assembly_defect = sim.max_assembly_defect();
    if (diag.max_leakage > kLeakageGuard)
        throw TruncationError("Fock leakage " + format_number(diag.max_leakage) + " exceeds " +
                              format_number(kLeakageGuard) + "; raise fock_cutoff");
    return {std::move(table), diag};
}

// --------------------------- basin sweep -----------------------------------------

struct SweepTable {
    std::vector<std::string> columns;  // a_re, a_im, then values
    std::vector<std::vector<double>> rows;
};

// tangle (2 qubits) or three-tangle (3 qubits) of basin_state(N, a, theta) along one axis of a.
inline SweepTable basin_sweep(int n_qubits, double theta, int points, const std::string& axis) {
    if (n_qubits != 2 && n_qubits != 3) throw ConfigError("basin_sweep needs 2 or 3 qubits");
    if (points < 2) throw ConfigError("sweep.points must be >= 2");
    SweepTable out;
    out.columns = n_qubits == 2 ? std::vector<std::string>{"a_re", "a_im", "tangle", "concurrence", "raw_tangle"}
                                : std::vector<std::string>{"a_re", "a_im", "three_tangle"};
    const double a_max = BasinSpec{n_qubits, 0.0, theta}.a_max();
    for (int i = 0; i < points; ++i) {
        // endpoints pinned to +-a_max exactly
        const double x = i == points - 1 ? a_max : -a_max + 2.0 * a_max * i / (points - 1.0);
        const cplx a = axis == "imag" ? cplx(0.0, x) : cplx(x, 0.0);
        const QubitState q = basin_state({n_qubits, a, theta});
        std::vector<double> row{a.real(), a.imag()};
        if (n_qubits == 2) {
            const auto tb = tangle(pure_density(q));
            row.insert(row.end(), {tb.tangle, tb.concurrence, tb.raw});
        } else {
            row.push_back(three_tangle(q));
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

// --------------------------- revival scan ----------------------------------------

struct RevivalScanEntry {
    int n_qubits = 0;
    std::string kind;    // revival | attractor | unlisted
    std::string source;  // ground | basin
    double predicted = std::numeric_limits<double>::quiet_NaN();  // units of t_r
    double located = std::numeric_limits<double>::quiet_NaN();
    double value = std::numeric_limits<double>::quiet_NaN();  // envelope height or entropy
};

struct RevivalScan {
    std::vector<RevivalScanEntry> entries;
    std::vector<SeriesTable> series;  // one per qubit count
    double collapse_over_tr = 0.0;
    double max_norm_drift = 0.0;
    double max_excitation_drift = 0.0;
    double max_leakage = 0.0;
};

// P_g from |g...g> and from the basin state a = 0, with revival peaks from the oscillation
// envelope and entropy minima of the basin run near each attractor time.
inline RevivalScan revival_scan(const ModelConfig& base, int max_qubits, const std::vector<double>& grid_over_tr,
                                double threshold) {
    if (max_qubits < 1 || max_qubits > kMaxProductQubits) throw ConfigError("scan.max_qubits out of range");
    RevivalScan scan;
    const double tc = base.collapse_time() / base.revival_time();
    scan.collapse_over_tr = tc;
    for (int n = 1; n <= max_qubits; ++n) {
        ModelConfig m = base;
        m.n_qubits = n;
        m.validate();
        const Propagator prop(m, QubitBasis::product);
        const double t_r = m.revival_time();
        std::vector<double> times;
        for (double x : grid_over_tr) times.push_back(x * t_r);

        SeriesTable table;
        table.columns = {"p_g_ground", "entropy_ground", "p_g_basin", "entropy_basin"};
        table.t_over_tr = grid_over_tr;
        table.rows.assign(times.size(), std::vector<double>(4));
        const QubitState ground = all_ground(n);
        const std::array<QubitState, 2> starts = {ground, basin_state({n, 0.0, m.theta})};
        for (std::size_t src = 0; src < 2; ++src) {
            const JointState js = embed_product(starts[src], m.field(), m.n_max());
            const double norm0 = js.norm(), exc0 = excitation_expectation(js);
            std::size_t i = 0;
            (void)evolve_series(prop, js, times, [&](double, const JointState& s) {
                const DensityMatrix rho = partial_trace_field(s);
                table.rows[i][2 * src] = probability(rho, ground);
                table.rows[i][2 * src + 1] = entropy(rho, n);
                scan.max_norm_drift = std::max(scan.max_norm_drift, std::abs(s.norm() - norm0));
                scan.max_excitation_drift = std::max(scan.max_excitation_drift, std::abs(excitation_expectation(s) - exc0));
                scan.max_leakage = std::max(scan.max_leakage, s.top_level_occupancy());
                ++i;
                return 0;
            });
        }

        RevivalOptions opt;
        opt.window = tc;
        opt.separation = tc;
        opt.threshold = threshold;
        opt.skip_start = 2.0 * tc;
        const std::vector<double> predicted = revival_times(n, 1);
        const std::vector<double> listed_wide = revival_times(n, 2);
        std::vector<RevivalScanEntry> best(predicted.size());
        for (std::size_t p = 0; p < predicted.size(); ++p) best[p] = {n, "revival", "", predicted[p]};
        for (std::size_t src = 0; src < 2; ++src) {
            const std::string name = src == 0 ? "ground" : "basin";
            const std::vector<double> pg = table.column(src == 0 ? "p_g_ground" : "p_g_basin");
            const std::vector<double> env = oscillation_envelope(pg, grid_over_tr[1] - grid_over_tr[0], tc);
            for (double peak : detect_revivals(grid_over_tr, pg, opt)) {
                const auto k = static_cast<std::size_t>(std::lround((peak - grid_over_tr[0]) / (grid_over_tr[1] - grid_over_tr[0])));
                const double height = env[std::min(k, env.size() - 1)];
                for (std::size_t p = 0; p < predicted.size(); ++p) {
                    const double d = std::abs(peak - predicted[p]);
                    if (d <= tc && (std::isnan(best[p].located) || d < std::abs(best[p].located - predicted[p]))) {
                        best[p].located = peak;
                        best[p].source = name;
                        best[p].value = height;
                    }
                }
                const bool listed = std::any_of(listed_wide.begin(), listed_wide.end(),
                                                [&](double x) { return std::abs(x - peak) <= tc; });
                if (!listed && peak <= 1.0 + tc) scan.entries.push_back({n, "unlisted", name, std::numeric_limits<double>::quiet_NaN(), peak, height});
            }
        }
        scan.entries.insert(scan.entries.end(), best.begin(), best.end());

        const std::vector<double> s_basin = table.column("entropy_basin");
        for (double at : attractor_times(n, 1)) {
            RevivalScanEntry e{n, "attractor", "basin", at};
            std::size_t lo = grid_over_tr.size(), hi = 0, arg = 0;
            for (std::size_t i = 0; i < grid_over_tr.size(); ++i) {
                if (std::abs(grid_over_tr[i] - at) > tc) continue;
                lo = std::min(lo, i);
                hi = std::max(hi, i);
                if (lo == i || s_basin[i] < s_basin[arg]) arg = i;
            }
            // a minimum on the window edge is not a local minimum
            if (lo < hi && arg > lo && arg < hi) {
                e.located = grid_over_tr[arg];
                e.value = s_basin[arg];
            }
            scan.entries.push_back(e);
        }
        scan.series.push_back(std::move(table));
    }
    if (scan.max_leakage > kLeakageGuard) throw TruncationError("revival_scan: Fock leakage exceeds guard");
    return scan;
}

// --------------------------- output -----------------------------------------------

namespace detail {

inline std::string time_tag(double t) {
    std::string s = format_number(t);
    for (char& ch : s) {
        if (ch == '.') ch = 'p';
        else if (ch == '-') ch = 'm';
        else if (ch == '+') ch = 'P';
    }
    return "t" + s;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
    }
    void header(const std::vector<std::string>& names) { line(names); }
    void numbers(const std::vector<double>& xs) {
        std::vector<std::string> s;
        s.reserve(xs.size());
        for (double x : xs) s.push_back(format_number(x));
        line(s);
    }
    void line(const std::vector<std::string>& cells) { out_ << join(cells) << '\n'; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline void write_grid(const std::filesystem::path& path, const PhaseGrid& g) {
    CsvWriter w(path);
    w.header({"re", "im", "value"});
    for (int j = 0; j < g.grid.im_points; ++j)
        for (int i = 0; i < g.grid.re_points; ++i) w.numbers({g.grid.re(i), g.grid.im(j), g.at(i, j)});
}

}  // namespace detail

struct RunReport {
    std::vector<std::filesystem::path> files;
    Settings meta;
};

// Writes every output of one experiment into out_dir.
inline RunReport run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    RunReport report;
    Settings derived;
    const ModelConfig& m = cfg.model;
    if (m.nbar > 0.0) {
        derived["revival_time"] = format_number(m.revival_time());
    }
    derived["collapse_time"] = format_number(m.collapse_time());
    derived["n_max"] = std::to_string(m.n_max());

    if (cfg.mode == RunMode::basin_sweep) {
        const SweepTable t = basin_sweep(m.n_qubits, m.theta, cfg.sweep_points, cfg.sweep_axis);
        detail::CsvWriter w(out_dir / "sweep.csv");
        w.header(t.columns);
        for (const auto& r : t.rows) w.numbers(r);
        report.files.push_back(w.path());
    } else if (cfg.mode == RunMode::revival_scan) {
        if (!(m.nbar > 0.0)) throw ConfigError("revival_scan needs nbar > 0");
        const RevivalScan scan = revival_scan(m, cfg.scan_max_qubits, cfg.times_over_tr(), cfg.scan_threshold);
        {
            detail::CsvWriter w(out_dir / "revivals.csv");
            w.header({"n_qubits", "kind", "source", "predicted_t_over_tr", "located_t_over_tr", "value"});
            for (const auto& e : scan.entries)
                w.line({std::to_string(e.n_qubits), e.kind, e.source.empty() ? "none" : e.source,
                        format_number(e.predicted), format_number(e.located), format_number(e.value)});
            report.files.push_back(w.path());
        }
        for (std::size_t k = 0; k < scan.series.size(); ++k) {
            const auto& t = scan.series[k];
            detail::CsvWriter w(out_dir / ("series_n" + std::to_string(k + 1) + ".csv"));
            std::vector<std::string> head{"t_over_tr"};
            head.insert(head.end(), t.columns.begin(), t.columns.end());
            w.header(head);
            for (std::size_t i = 0; i < t.rows.size(); ++i) {
                std::vector<double> r{t.t_over_tr[i]};
                r.insert(r.end(), t.rows[i].begin(), t.rows[i].end());
                w.numbers(r);
            }
            report.files.push_back(w.path());
        }
        derived["max_norm_drift"] = format_number(scan.max_norm_drift);
        derived["max_excitation_drift"] = format_number(scan.max_excitation_drift);
        derived["max_leakage"] = format_number(scan.max_leakage);
        derived["in_basin"] = "n/a";
    } else {
        if (!(m.nbar > 0.0)) throw ConfigError("time series are in units of t_r and need nbar > 0");
        const Simulation sim(cfg);
        const auto [table, diag] = compute_series(cfg, sim);
        {
            detail::CsvWriter w(out_dir / "series.csv");
            std::vector<std::string> head{"t_over_tr"};
            head.insert(head.end(), table.columns.begin(), table.columns.end());
            w.header(head);
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                std::vector<double> r{table.t_over_tr[i]};
                r.insert(r.end(), table.rows[i].begin(), table.rows[i].end());
                w.numbers(r);
            }
            report.files.push_back(w.path());
        }
        const double t_r = m.revival_time();
        for (double x : cfg.q_times) {
            const JointState s = sim.state_at(x * t_r);
            const double h = cfg.field_half_width();
            const PhaseGrid g = q_function(partial_trace_qubits(s), PlaneGrid::square(h, cfg.q_points));
            const auto path = out_dir / ("qgrid_field_" + detail::time_tag(x) + ".csv");
            detail::write_grid(path, g);
            report.files.push_back(path);
        }
        for (double x : cfg.spin_q_times) {
            const JointState s = sim.state_at(x * t_r);
            const PhaseGrid g = spin_q_function(partial_trace_field(s), PlaneGrid::square(cfg.spin_q_half_width, cfg.spin_q_points));
            const auto path = out_dir / ("qgrid_spin_" + detail::time_tag(x) + ".csv");
            detail::write_grid(path, g);
            report.files.push_back(path);
        }
        derived["basis_used"] = diag.basis;
        derived["basin_measure"] = diag.basin.measure;
        derived["basin_value"] = format_number(diag.basin.value);
        derived["in_basin"] = diag.basin.in_basin ? "yes" : "no";
        derived["max_norm_drift"] = format_number(diag.max_norm_drift);
        derived["max_excitation_drift"] = format_number(diag.max_excitation_drift);
        derived["max_entropy_gap"] = format_number(diag.max_entropy_gap);
        derived["max_leakage"] = format_number(diag.max_leakage);
        derived["max_assembly_defect"] = format_number(diag.max_assembly_defect);
    }

    {
        const auto path = out_dir / "meta.txt";
        std::ofstream meta(path, std::ios::binary | std::ios::trunc);
        if (!meta) throw std::runtime_error("cannot write " + path.string());
        meta << "# resolved configuration\n" << render_settings(to_settings(cfg)) << "# derived\n";
        for (const auto& [k, v] : derived) meta << "derived." << k << " = " << v << '\n';
        report.files.push_back(path);
    }
    report.meta = to_settings(cfg);
    for (const auto& [k, v] : derived) report.meta["derived." + k] = v;
    return report;
}

}  // namespace tcm

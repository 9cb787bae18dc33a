// Command-line laboratory for the z^m + lambda/z^l family: trichotomy
// classification, parameter/dynamical plane rendering, Cantor models, the
// quasiregular surgery map, and quasicircle geometry reports.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcm/cantor.hpp"
#include "mcm/config.hpp"
#include "mcm/contour.hpp"
#include "mcm/dynamics.hpp"
#include "mcm/grid_io.hpp"
#include "mcm/metrics.hpp"
#include "mcm/parallel.hpp"
#include "mcm/png.hpp"
#include "mcm/render.hpp"
#include "mcm/surgery.hpp"
#include "mcm/trichotomy.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIndeterminate = 3;
constexpr int kExitIo = 4;

mcm::cplx parse_complex(std::string s) {
    s = mcm::trim(s);
    if (s.empty()) throw CLI::ValidationError("lambda", "empty complex literal");
    auto comma = s.find(',');
    if (comma != std::string::npos) {
        return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    }
    if (s.back() == 'i' || s.back() == 'I') {
        s.pop_back();
        // forms: "bi", "a+bi", "a-bi"; signs inside exponents do not split
        std::size_t split = std::string::npos;
        for (std::size_t k = s.size(); k-- > 1;) {
            if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
                split = k;
                break;
            }
        }
        if (split == std::string::npos || split == 0) {
            double b = (s.empty() || s == "+" || s == "-") ? (s == "-" ? -1.0 : 1.0)
                                                           : std::stod(s);
            return {0.0, b};
        }
        double a = std::stod(s.substr(0, split));
        std::string bs = s.substr(split);
        double b = (bs == "+" ? 1.0 : bs == "-" ? -1.0 : std::stod(bs));
        return {a, b};
    }
    return {std::stod(s), 0.0};
}

struct Bounds {
    double re_min = -1.5, re_max = 1.5, im_min = -1.5, im_max = 1.5;
};

Bounds parse_bounds(const std::string& s) {
    Bounds b;
    std::istringstream is(s);
    char sep;
    if (!(is >> b.re_min >> sep >> b.re_max >> sep >> b.im_min >> sep >> b.im_max))
        throw CLI::ValidationError("bounds", "expected four comma-separated numbers");
    return b;
}

json verdict_json(const mcm::Verdict& v) {
    json j;
    j["class"] = mcm::topology_class_name(v.cls);
    j["classCode"] = static_cast<int>(v.cls);
    j["escapeIndex"] = v.escape_index ? json(*v.escape_index) : json(nullptr);
    j["entryIndex"] = v.entry_index ? json(*v.entry_index) : json(nullptr);
    j["entryModulus"] = v.entry_modulus ? json(*v.entry_modulus) : json(nullptr);
    j["iterationsUsed"] = v.iterations_used;
    return j;
}

// Effective settings echoed into every JSON report.
struct Effective {
    mcm::Config file;

    double num(CLI::Option* opt, const char* key, double flag_val, double def) const {
        if (opt && opt->count() > 0) return flag_val;
        if (auto v = file.get_double(key)) return *v;
        return def;
    }
    int integer(CLI::Option* opt, const char* key, int flag_val, int def) const {
        return static_cast<int>(num(opt, key, static_cast<double>(flag_val),
                                    static_cast<double>(def)));
    }
};

mcm::ImageSpec palette_from_config(const mcm::Config& cfg, double gamma) {
    mcm::ImageSpec spec = mcm::ImageSpec::verdict_default();
    spec.gamma = gamma;
    for (int code = 0; code <= 5; ++code) {
        auto v = cfg.get("palette_" + std::to_string(code));
        if (!v) continue;
        unsigned rgb = std::stoul(*v, nullptr, 16);
        spec.palette[code] = {static_cast<std::uint8_t>((rgb >> 16) & 0xff),
                              static_cast<std::uint8_t>((rgb >> 8) & 0xff),
                              static_cast<std::uint8_t>(rgb & 0xff)};
    }
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the family z^m + lambda/z^l"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key = value configuration file")
        ->configurable(false);
    int jobs_flag = 0;
    auto* jobs_opt = app.add_option("--jobs", jobs_flag, "worker count (default MCM_JOBS or cores)");

    auto effective_jobs = [&]() {
        if (jobs_opt->count() > 0 && jobs_flag >= 1) return jobs_flag;
        return mcm::default_jobs();
    };

    int exit_code = kExitOk;

    // ---- classify ----------------------------------------------------------
    auto* c_cmd = app.add_subcommand("classify", "escape-trichotomy verdict for one parameter");
    int c_l = 3, c_m = 3, c_maxiter = 10000;
    double c_band = 0.05;
    std::string c_lambda = "1";
    auto* c_l_opt = c_cmd->add_option("--l", c_l, "pole exponent l");
    auto* c_m_opt = c_cmd->add_option("--m", c_m, "power exponent m");
    c_cmd->add_option("--lambda", c_lambda, "complex parameter, e.g. 100 or 0.1+0.2i or re,im");
    auto* c_it_opt = c_cmd->add_option("--max-iter", c_maxiter, "iteration budget");
    auto* c_band_opt = c_cmd->add_option("--band", c_band, "ambiguity band fraction");
    c_cmd->callback([&] {
        Effective eff;
        if (!config_path.empty()) eff.file = mcm::load_config(config_path);
        int l = eff.integer(c_l_opt, "l", c_l, 3);
        int m = eff.integer(c_m_opt, "m", c_m, 3);
        mcm::cplx lambda = parse_complex(c_lambda);
        if (c_cmd->count("--lambda") == 0 && eff.file.has("lambda_re"))
            lambda = {eff.file.get_double("lambda_re").value_or(0.0),
                      eff.file.get_double("lambda_im").value_or(0.0)};
        mcm::ClassifierConfig cfg;
        cfg.max_iter = eff.integer(c_it_opt, "max_iter", c_maxiter, 10000);
        cfg.ambiguity_band = eff.num(c_band_opt, "ambiguity_band", c_band, 0.05);
        mcm::Verdict v = mcm::classify(mcm::make_map(lambda, l, m), cfg);
        json j = verdict_json(v);
        j["config"] = {{"l", l},
                       {"m", m},
                       {"lambda_re", lambda.real()},
                       {"lambda_im", lambda.imag()},
                       {"max_iter", cfg.max_iter},
                       {"ambiguity_band", cfg.ambiguity_band}};
        std::cout << j.dump(2) << "\n";
        if (v.cls == mcm::TopologyClass::Indeterminate) exit_code = kExitIndeterminate;
    });

    // ---- scan-ray ----------------------------------------------------------
    auto* s_cmd = app.add_subcommand(
        "scan-ray", "verdict sweep along the positive real axis plus regime brackets");
    int s_n = 3, s_samples = 1000, s_maxiter = 10000;
    double s_tol = 1e-9, s_lo = 1e-8, s_hi = 10.0, s_band = 0.05;
    std::string s_csv = "scan_ray.csv";
    auto* s_n_opt = s_cmd->add_option("--n", s_n, "exponent (l = m = n)");
    s_cmd->add_option("--tol", s_tol, "bracket bisection tolerance");
    s_cmd->add_option("--samples", s_samples, "number of sweep samples");
    s_cmd->add_option("--min", s_lo, "sweep lower bound");
    s_cmd->add_option("--max", s_hi, "sweep upper bound");
    s_cmd->add_option("--csv", s_csv, "sweep CSV output path");
    auto* s_it_opt = s_cmd->add_option("--max-iter", s_maxiter, "iteration budget");
    auto* s_band_opt = s_cmd->add_option("--band", s_band, "ambiguity band fraction");
    s_cmd->callback([&] {
        Effective eff;
        if (!config_path.empty()) eff.file = mcm::load_config(config_path);
        int n = eff.integer(s_n_opt, "l", s_n, 3);
        mcm::ClassifierConfig cfg;
        cfg.max_iter = eff.integer(s_it_opt, "max_iter", s_maxiter, 10000);
        cfg.ambiguity_band = eff.num(s_band_opt, "ambiguity_band", s_band, 0.05);
        mcm::Exponents exp{n, n};

        std::ofstream csv(s_csv, std::ios::trunc);
        if (!csv) throw mcm::GridIoError("cannot open for writing: " + s_csv);
        csv << "lambda,verdictCode\n";
        for (int i = 0; i < s_samples; ++i) {
            double x = s_lo * std::pow(s_hi / s_lo, static_cast<double>(i) / (s_samples - 1));
            mcm::Verdict v = mcm::classify(mcm::make_map({x, 0.0}, n, n), cfg);
            csv << std::setprecision(17) << x << "," << static_cast<int>(v.cls) << "\n";
        }
        csv.close();

        mcm::RealBracket br = mcm::bracket_real(exp, s_tol, cfg);
        json j;
        j["lambda0"] = br.lambda0;
        j["lambda1"] = br.lambda1;
        j["tol"] = br.tol;
        j["csv"] = s_csv;
        j["config"] = {{"n", n},
                       {"max_iter", cfg.max_iter},
                       {"ambiguity_band", cfg.ambiguity_band},
                       {"samples", s_samples}};
        std::cout << j.dump(2) << "\n";
    });

    // ---- render-julia ------------------------------------------------------
    auto* rj_cmd = app.add_subcommand("render-julia", "escape-depth raster of the dynamical plane");
    int rj_l = 3, rj_m = 3, rj_res = 512, rj_maxiter = 1000;
    std::string rj_lambda = "1", rj_bounds = "-1.5,1.5,-1.5,1.5";
    std::string rj_grid, rj_png;
    double rj_gamma = 1.0;
    auto* rj_l_opt = rj_cmd->add_option("--l", rj_l, "pole exponent l");
    auto* rj_m_opt = rj_cmd->add_option("--m", rj_m, "power exponent m");
    rj_cmd->add_option("--lambda", rj_lambda, "complex parameter");
    auto* rj_b_opt = rj_cmd->add_option("--bounds", rj_bounds, "reMin,reMax,imMin,imMax");
    auto* rj_r_opt = rj_cmd->add_option("--res", rj_res, "grid resolution (square)");
    auto* rj_it_opt = rj_cmd->add_option("--max-iter", rj_maxiter, "iteration budget");
    rj_cmd->add_option("--grid-out", rj_grid, "binary grid output path");
    rj_cmd->add_option("--png-out", rj_png, "PNG output path");
    auto* rj_g_opt = rj_cmd->add_option("--gamma", rj_gamma, "escape shading gamma");
    rj_cmd->callback([&] {
        Effective eff;
        if (!config_path.empty()) eff.file = mcm::load_config(config_path);
        int l = eff.integer(rj_l_opt, "l", rj_l, 3);
        int m = eff.integer(rj_m_opt, "m", rj_m, 3);
        int res = eff.integer(rj_r_opt, "resolution", rj_res, 512);
        int maxiter = eff.integer(rj_it_opt, "max_iter", rj_maxiter, 1000);
        double gamma = eff.num(rj_g_opt, "gamma", rj_gamma, 1.0);
        mcm::cplx lambda = parse_complex(rj_lambda);
        if (rj_cmd->count("--lambda") == 0 && eff.file.has("lambda_re"))
            lambda = {eff.file.get_double("lambda_re").value_or(0.0),
                      eff.file.get_double("lambda_im").value_or(0.0)};
        Bounds b = parse_bounds(rj_b_opt->count() || !eff.file.has("bounds")
                                    ? rj_bounds
                                    : *eff.file.get("bounds"));
        mcm::FieldGrid g = mcm::render_julia(mcm::make_map(lambda, l, m), b.re_min, b.re_max,
                                             b.im_min, b.im_max, res, res, maxiter,
                                             effective_jobs());
        json j;
        if (!rj_grid.empty()) {
            mcm::write_grid(g, rj_grid);
            j["grid"] = rj_grid;
        }
        if (!rj_png.empty()) {
            mcm::encode_png(g, mcm::ImageSpec::escape_default(gamma), rj_png);
            j["png"] = rj_png;
        }
        j["hash"] = mcm::grid_hash(g);
        j["config"] = {{"l", l}, {"m", m}, {"lambda_re", lambda.real()},
                       {"lambda_im", lambda.imag()}, {"resolution", res},
                       {"max_iter", maxiter},
                       {"bounds", {b.re_min, b.re_max, b.im_min, b.im_max}},
                       {"jobs", effective_jobs()}, {"gamma", gamma}};
        std::cout << j.dump(2) << "\n";
    });

    // ---- render-param ------------------------------------------------------
    auto* rp_cmd = app.add_subcommand("render-param", "verdict raster of the parameter plane");
    int rp_l = 3, rp_m = 3, rp_n = 0, rp_res = 512, rp_maxiter = 10000;
    double rp_band = 0.05, rp_gamma = 1.0;
    std::string rp_bounds = "-0.1,0.1,-0.1,0.1", rp_grid, rp_png;
    auto* rp_l_opt = rp_cmd->add_option("--l", rp_l, "pole exponent l");
    auto* rp_m_opt = rp_cmd->add_option("--m", rp_m, "power exponent m");
    auto* rp_n_opt = rp_cmd->add_option("--n", rp_n, "shorthand for l = m = n");
    auto* rp_b_opt = rp_cmd->add_option("--bounds", rp_bounds, "reMin,reMax,imMin,imMax");
    auto* rp_r_opt = rp_cmd->add_option("--res", rp_res, "grid resolution (square)");
    auto* rp_it_opt = rp_cmd->add_option("--max-iter", rp_maxiter, "iteration budget");
    auto* rp_band_opt = rp_cmd->add_option("--band", rp_band, "ambiguity band fraction");
    rp_cmd->add_option("--grid-out", rp_grid, "binary grid output path");
    rp_cmd->add_option("--png-out", rp_png, "PNG output path");
    rp_cmd->callback([&] {
        Effective eff;
        if (!config_path.empty()) eff.file = mcm::load_config(config_path);
        int l = eff.integer(rp_l_opt, "l", rp_l, 3);
        int m = eff.integer(rp_m_opt, "m", rp_m, 3);
        if (rp_n_opt->count() > 0) l = m = rp_n;
        int res = eff.integer(rp_r_opt, "resolution", rp_res, 512);
        mcm::ClassifierConfig cfg;
        cfg.max_iter = eff.integer(rp_it_opt, "max_iter", rp_maxiter, 10000);
        cfg.ambiguity_band = eff.num(rp_band_opt, "ambiguity_band", rp_band, 0.05);
        Bounds b = parse_bounds(rp_b_opt->count() || !eff.file.has("bounds")
                                    ? rp_bounds
                                    : *eff.file.get("bounds"));
        mcm::FieldGrid g = mcm::render_param({l, m}, b.re_min, b.re_max, b.im_min, b.im_max,
                                             res, res, cfg, effective_jobs());
        json j;
        if (!rp_grid.empty()) {
            mcm::write_grid(g, rp_grid);
            j["grid"] = rp_grid;
        }
        if (!rp_png.empty()) {
            mcm::encode_png(g, palette_from_config(eff.file, rp_gamma), rp_png);
            j["png"] = rp_png;
        }
        j["hash"] = mcm::grid_hash(g);
        j["config"] = {{"l", l}, {"m", m}, {"resolution", res},
                       {"max_iter", cfg.max_iter}, {"ambiguity_band", cfg.ambiguity_band},
                       {"bounds", {b.re_min, b.re_max, b.im_min, b.im_max}},
                       {"jobs", effective_jobs()}};
        std::cout << j.dump(2) << "\n";
    });

    // ---- metrics -----------------------------------------------------------
    auto* mt_cmd = app.add_subcommand(
        "metrics", "peripheral-circle extraction and quasicircle geometry report");
    std::string mt_grid, mt_csv = "metrics_curves.csv";
    int mt_maxdepth = 5, mt_minpixels = 16;
    long mt_pairs = 2000;
    mt_cmd->add_option("--grid", mt_grid, "escape-depth grid file")->required();
    mt_cmd->add_option("--max-depth", mt_maxdepth, "deepest preimage level to trace");
    mt_cmd->add_option("--min-pixels", mt_minpixels, "smallest traced component");
    mt_cmd->add_option("--pairs", mt_pairs, "turning-constant pair budget per curve");
    mt_cmd->add_option("--csv", mt_csv, "per-curve CSV output path");
    mt_cmd->callback([&] {
        mcm::FieldGrid g = mcm::read_grid(mt_grid);
        mcm::ExtractionResult ex = mcm::extract_peripheral(g, mt_maxdepth, mt_minpixels);
        json j;
        j["curves"] = ex.curves.size();
        j["droppedOpen"] = ex.dropped_open;
        j["droppedSmall"] = ex.dropped_small;
        // Finite-depth estimates only: bounds for the traced depths, not the
        // asymptotic family.
        j["note"] = "finite-depth estimates over the traced curves";
        if (!ex.curves.empty()) {
            mcm::CarpetReport rep = mcm::carpet_report(ex.curves, mt_pairs);
            std::ofstream csv(mt_csv, std::ios::trunc);
            if (!csv) throw mcm::GridIoError("cannot open for writing: " + mt_csv);
            csv << "curveId,depth,vertices,diameter,kEstimate\n";
            for (const auto& st : rep.per_curve)
                csv << st.curve_id << "," << st.depth << "," << st.vertex_count << ","
                    << std::setprecision(17) << st.diameter << "," << st.k_estimate << "\n";
            j["maxK"] = rep.max_k;
            j["maxKCurve"] = rep.max_k_curve;
            if (rep.separation) {
                j["sMin"] = rep.separation->s_minimum;
                j["sMinWitness"] = {rep.separation->witness_curves.first,
                                    rep.separation->witness_curves.second};
            }
            j["csv"] = mt_csv;
        }
        j["config"] = {{"grid", mt_grid}, {"max_depth", mt_maxdepth},
                       {"min_pixels", mt_minpixels}, {"pairs", mt_pairs}};
        std::cout << j.dump(2) << "\n";
    });

    // ---- surgery -----------------------------------------------------------
    auto* sg_cmd = app.add_subcommand(
        "surgery", "build and verify the degree-(l+m) quasiregular model map");
    int sg_l = 2, sg_m = 3, sg_samples = 10000;
    double sg_r0 = 0.5;
    std::string sg_report, sg_mesh;
    auto* sg_l_opt = sg_cmd->add_option("--l", sg_l, "pole exponent l");
    auto* sg_m_opt = sg_cmd->add_option("--m", sg_m, "power exponent m");
    auto* sg_r0_opt = sg_cmd->add_option("--r0", sg_r0, "inner radius of the model annulus");
    sg_cmd->add_option("--samples", sg_samples, "verification sample budget");
    sg_cmd->add_option("--report", sg_report, "JSON report output path");
    sg_cmd->add_option("--mesh-out", sg_mesh, "prefix for cell-complex CSV vertex/edge lists");
    sg_cmd->callback([&] {
        Effective eff;
        if (!config_path.empty()) eff.file = mcm::load_config(config_path);
        int l = eff.integer(sg_l_opt, "l", sg_l, 2);
        int m = eff.integer(sg_m_opt, "m", sg_m, 3);
        double r0 = eff.num(sg_r0_opt, "r0", sg_r0, 0.5);
        mcm::SurgeryMap f = mcm::make_surgery_map(l, m, r0);
        mcm::QuasiregularReport rep = mcm::surgery_verify(f, sg_samples);
        json j;
        j["degreeCount"] = rep.degree_count;
        j["maxDilatation"] = rep.max_dilatation;
        j["symmetryError"] = rep.symmetry_error;
        j["seamError"] = rep.seam_error;
        j["passThroughViolations"] = rep.pass_through_violations;
        j["inversionFailures"] = rep.inversion_failures;
        j["degreeMismatches"] = rep.degree_mismatches;
        j["branchFiberSize"] = rep.branch_fiber_size;
        j["config"] = {{"l", l}, {"m", m}, {"r0", r0}, {"samples", sg_samples}};
        if (!sg_report.empty()) {
            std::ofstream os(sg_report, std::ios::trunc);
            if (!os) throw mcm::GridIoError("cannot open for writing: " + sg_report);
            os << j.dump(2) << "\n";
        }
        if (!sg_mesh.empty()) {
            std::ofstream vs(sg_mesh + "_vertices.csv", std::ios::trunc);
            std::ofstream es(sg_mesh + "_edges.csv", std::ios::trunc);
            if (!vs || !es)
                throw mcm::GridIoError("cannot open mesh outputs with prefix: " + sg_mesh);
            vs << "id,x,y,kind\n";
            es << "src,dst,cell\n";
            int id = 0;
            std::vector<int> first_of_cell;
            for (const auto& cell : f.complex.cells) {
                first_of_cell.push_back(id);
                for (const auto& p : cell.outline) {
                    vs << id << "," << std::setprecision(17) << p.real() << "," << p.imag()
                       << "," << static_cast<int>(cell.kind) << "\n";
                    ++id;
                }
            }
            int cell_idx = 0;
            for (const auto& cell : f.complex.cells) {
                int base = first_of_cell[cell_idx];
                int n = static_cast<int>(cell.outline.size());
                for (int k = 0; k < n; ++k)
                    es << base + k << "," << base + (k + 1) % n << "," << cell_idx << "\n";
                ++cell_idx;
            }
        }
        std::cout << j.dump(2) << "\n";
    });

    // ---- cantor ------------------------------------------------------------
    auto* ct_cmd = app.add_subcommand("cantor", "exact interval levels of the Cantor IFS");
    int ct_l = 3, ct_m = 3, ct_levels = 5;
    std::string ct_csv;
    auto* ct_l_opt = ct_cmd->add_option("--l", ct_l, "pole exponent l");
    auto* ct_m_opt = ct_cmd->add_option("--m", ct_m, "power exponent m");
    ct_cmd->add_option("--levels", ct_levels, "deepest level to emit");
    ct_cmd->add_option("--csv", ct_csv, "CSV output path (default stdout)");
    ct_cmd->callback([&] {
        Effective eff;
        if (!config_path.empty()) eff.file = mcm::load_config(config_path);
        int l = eff.integer(ct_l_opt, "l", ct_l, 3);
        int m = eff.integer(ct_m_opt, "m", ct_m, 3);
        mcm::CantorIFS ifs = mcm::make_cantor_ifs(l, m);
        std::ostream* os = &std::cout;
        std::ofstream file;
        if (!ct_csv.empty()) {
            file.open(ct_csv, std::ios::trunc);
            if (!file) throw mcm::GridIoError("cannot open for writing: " + ct_csv);
            os = &file;
        }
        *os << "level,index,a_num,a_den,b_num,b_den\n";
        for (int lvl = 0; lvl <= ct_levels; ++lvl) {
            mcm::IntervalUnion u = mcm::level_set(ifs, lvl);
            for (std::size_t i = 0; i < u.intervals.size(); ++i) {
                const auto& iv = u.intervals[i];
                *os << lvl << "," << i << "," << iv.a.num << "," << iv.a.den << ","
                    << iv.b.num << "," << iv.b.den << "\n";
            }
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    } catch (const mcm::BracketingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIndeterminate;
    } catch (const mcm::GridIoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const mcm::PngError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const mcm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return exit_code;
}

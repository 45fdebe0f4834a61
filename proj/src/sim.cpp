#include "chaomask/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>

#include "chaomask/errors.hpp"

namespace chaomask {

namespace {

constexpr double kDivergenceNorm = 1e9;

bool at_or_after(double t, double t0)
{
    return t >= t0 - 1e-9 * std::max(1.0, std::abs(t0));
}

// Everything the right-hand side needs, resolved once per run.
class Engine {
public:
    explicit Engine(const Scenario& s) : s_(s)
    {
        nx_ = s.plant.nx();
        nxi_ = s.masked() ? s.mask->n_xi() : 0;
        ne_ = s.estimator_dim();
        if (s.masked()) {
            ext_ = std::make_unique<ExtendedSystem>(build_extended(s.plant, *s.mask));
            c_est_ = ext_->C;
        } else {
            c_est_ = s.plant.C();
        }
        if (const auto* e = std::get_if<EavesdropAttack>(&s.attack))
            eaves_ = std::make_unique<EavesdropperObserver>(make_eavesdropper(s.plant, e->L_bar));
        replay_ = std::get_if<ReplayAttack>(&s.attack);
        if (replay_ != nullptr) {
            recording_.t0 = 0.0;
            recording_.dt = 0.5 * s.dt;
        }
        na_ = eaves_ ? nx_ : 0;
    }

    Eigen::Index dim() const { return nx_ + nxi_ + ne_ + na_; }

    Vector initial_state() const
    {
        Vector st(dim());
        st.segment(0, nx_) = s_.x0;
        if (nxi_ > 0)
            st.segment(nx_, nxi_) = s_.xi0;
        st.segment(nx_ + nxi_, ne_) = s_.xhat0;
        if (na_ > 0)
            st.segment(nx_ + nxi_ + ne_, na_) = s_.xa0.size() ? s_.xa0 : Vector::Zero(nx_);
        return st;
    }

    struct Outputs {
        Vector y, ybold, chan, z, u;
    };

    // `record`: push the live transmitted signal into the replay recording.
    Outputs outputs(double t, const Vector& st, bool record)
    {
        Outputs o;
        const auto x = st.segment(0, nx_);
        const auto xhat = st.segment(nx_ + nxi_, ne_);
        o.y = s_.plant.C() * x;
        o.ybold = nxi_ > 0 ? Vector(o.y + s_.mask->Lambda * st.segment(nx_, nxi_)) : o.y;
        o.chan = o.ybold;
        if (replay_ != nullptr) {
            if (record)
                recording_.states.push_back(o.ybold);
            o.chan = replay_channel(recording_, replay_->tau, replay_->t_start, t, o.ybold);
        }
        if (fdi_active_)
            o.chan += fdi_a_;
        if (s_.controller) {
            const auto& c = *s_.controller;
            o.u = -c.K * xhat.tail(nx_);
            if (c.u_ref.size())
                o.u += c.u_ref;
        } else {
            o.u = Vector::Zero(s_.plant.nu());
        }
        o.z = o.chan - c_est_ * xhat;
        return o;
    }

    Vector derivative(double t, const Vector& st, bool record)
    {
        const Outputs o = outputs(t, st, record);
        Vector d(dim());
        const auto x = st.segment(0, nx_);
        d.segment(0, nx_) = s_.plant.A() * x + s_.plant.B() * o.u;
        const auto xhat = st.segment(nx_ + nxi_, ne_);
        if (nxi_ > 0) {
            d.segment(nx_, nxi_) = s_.mask->derivative(st.segment(nx_, nxi_));
            Vector clamped = xhat;
            clamped.head(nxi_) = saturate(xhat.head(nxi_), *s_.mask->sigma);
            d.segment(nx_ + nxi_, ne_) = ext_->A * xhat + ext_->G.eval(clamped) + ext_->B * o.u + s_.L * o.z;
        } else {
            d.segment(nx_, ne_) = s_.plant.A() * xhat + s_.plant.B() * o.u + s_.L * o.z;
        }
        if (na_ > 0)
            d.segment(nx_ + nxi_ + ne_, na_) = eaves_->derivative(st.segment(nx_ + nxi_ + ne_, na_), o.u, o.chan);
        return d;
    }

    // Classical RK4 with the stage evaluations recorded on the half grid.
    Vector step(double t, const Vector& st, double h)
    {
        const Vector k1 = derivative(t, st, false); // grid sample already recorded
        const Vector k2 = derivative(t + 0.5 * h, st + 0.5 * h * k1, true);
        const Vector k3 = derivative(t + 0.5 * h, st + 0.5 * h * k2, false);
        const Vector k4 = derivative(t + h, st + h * k3, false);
        return st + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    void set_fdi(bool active, Vector a)
    {
        fdi_active_ = active;
        fdi_a_ = std::move(a);
    }

    Eigen::Index nx_ = 0, nxi_ = 0, ne_ = 0, na_ = 0;

private:
    const Scenario& s_;
    std::unique_ptr<ExtendedSystem> ext_;
    std::unique_ptr<EavesdropperObserver> eaves_;
    const ReplayAttack* replay_ = nullptr;
    Trajectory recording_;
    Matrix c_est_;
    bool fdi_active_ = false;
    Vector fdi_a_;
};

} // namespace

Eigen::Index Scenario::estimator_dim() const
{
    return plant.nx() + (mask ? mask->n_xi() : 0);
}

void validate_scenario(const Scenario& s)
{
    const Eigen::Index nx = s.plant.nx();
    const Eigen::Index ny = s.plant.ny();
    const Eigen::Index ne = s.estimator_dim();
    if (!(s.dt > 0.0))
        throw ConfigError("dt must be positive");
    step_count(s.dt, s.t_end);
    if (!(s.t_settle >= 0.0) || !(s.t_settle < s.t_end))
        throw ConfigError("t_settle must lie in [0, t_end)");
    if (!(s.detector_nu >= 0.0))
        throw ConfigError("detector threshold must be nonnegative");
    if (s.x0.size() != nx)
        throw DimensionError("x0 must have " + std::to_string(nx) + " entries");
    if (s.xhat0.size() != ne)
        throw DimensionError("xhat0 must have " + std::to_string(ne) + " entries");
    if (s.L.rows() != ne || s.L.cols() != ny)
        throw DimensionError("observer gain must be " + std::to_string(ne) + "x" + std::to_string(ny));
    require_finite(s.L, "observer gain");
    if (s.mask) {
        if (!s.mask->populated())
            throw ConfigError("mask must be populated (sigma, ell, d_bound)");
        if (s.xi0.size() != s.mask->n_xi())
            throw DimensionError("xi0 must have " + std::to_string(s.mask->n_xi()) + " entries");
    }
    if (s.P && (s.P->rows() != ne || s.P->cols() != ne))
        throw DimensionError("P must match the estimator dimension");
    if (s.xa0.size() && s.xa0.size() != nx)
        throw DimensionError("xa0 must have " + std::to_string(nx) + " entries");
    if (s.controller) {
        const auto& c = *s.controller;
        if (c.K.rows() != s.plant.nu() || c.K.cols() != nx)
            throw DimensionError("K must be " + std::to_string(s.plant.nu()) + "x" + std::to_string(nx));
        if (c.u_ref.size() && c.u_ref.size() != s.plant.nu())
            throw DimensionError("u_ref must have " + std::to_string(s.plant.nu()) + " entries");
        if (!is_hurwitz(s.plant.A() - s.plant.B() * c.K))
            throw DomainError("A - B K is not Hurwitz");
    }
    validate_attack(s.attack, ny);
    if (const auto* r = std::get_if<ReplayAttack>(&s.attack))
        if (r->t_start > s.t_end)
            throw ConfigError("replay starts after the end of the run");
}

Scenario clean_variant(const Scenario& s)
{
    Scenario c = s;
    if (!std::holds_alternative<EavesdropAttack>(s.attack))
        c.attack = NoAttack{};
    return c;
}

Vector SimTrace::estimation_error(std::size_t k) const
{
    if (!masked)
        return x[k] - xhat[k];
    Vector truth(nxi + nx);
    truth << xi[k], x[k];
    return truth - xhat[k];
}

Vector SimTrace::plant_error(std::size_t k) const
{
    return x[k] - xhat[k].tail(nx);
}

SimTrace run_scenario(const Scenario& s)
{
    validate_scenario(s);
    Engine eng(s);
    const std::size_t n_steps = step_count(s.dt, s.t_end);

    SimTrace tr;
    tr.dt = s.dt;
    tr.t_settle = s.t_settle;
    tr.masked = s.masked();
    tr.nx = eng.nx_;
    tr.nxi = eng.nxi_;
    tr.attack = attack_name(s.attack);
    if (const auto* r = std::get_if<ReplayAttack>(&s.attack))
        tr.attack_start = r->t_start;

    std::optional<FdiAttacker> fdi;
    FdiAttackerState fdi_state;
    const auto* fdi_spec = std::get_if<FdiAttack>(&s.attack);
    if (fdi_spec != nullptr) {
        // The attacker knows the plant and the plain estimator gain only; when
        // the estimator is masked it still models the unmasked one.
        const Matrix l_plain = s.masked() ? Matrix(s.L.bottomRows(eng.nx_)) : s.L;
        fdi.emplace(AttackerKnowledge::from_plant(s.plant, l_plain));
        fdi_state = fdi->initial_state();
        tr.attack_start = fdi_spec->t_start;
    }

    const std::size_t n_samples = n_steps + 1;
    for (auto* v : {&tr.x, &tr.xi, &tr.xhat, &tr.y, &tr.ybold, &tr.chan, &tr.z, &tr.u, &tr.xa})
        v->reserve(n_samples);
    tr.t.reserve(n_samples);

    Vector st = eng.initial_state();
    const Eigen::Index ne = eng.ne_;
    for (std::size_t k = 0; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) * s.dt;
        if (fdi && at_or_after(t, fdi_spec->t_start)) {
            const Vector phi = fdi_spec->signal.eval(fdi_spec->M, t - fdi_spec->t_start);
            eng.set_fdi(true, fdi_step(fdi_state, *fdi, phi, s.dt));
        }

        const auto o = eng.outputs(t, st, true);
        tr.t.push_back(t);
        tr.x.push_back(st.segment(0, eng.nx_));
        tr.xi.push_back(st.segment(eng.nx_, eng.nxi_));
        tr.xhat.push_back(st.segment(eng.nx_ + eng.nxi_, ne));
        tr.xa.push_back(st.segment(eng.nx_ + eng.nxi_ + ne, eng.na_));
        tr.y.push_back(o.y);
        tr.ybold.push_back(o.ybold);
        tr.chan.push_back(o.chan);
        tr.z.push_back(o.z);
        tr.u.push_back(o.u);
        tr.g.push_back(o.z.squaredNorm());
        tr.err_norm.push_back(tr.estimation_error(k).norm());

        if (k == n_steps)
            break;
        st = eng.step(t, st, s.dt);
        if (!st.allFinite() || st.norm() > kDivergenceNorm)
            throw IntegrationDiverged("closed-loop simulation diverged", t + s.dt);
    }

    const Detection det = detect(tr, s.detector_nu, s.t_settle);
    tr.alarm = det.alarm;
    tr.first_alarm = det.first_alarm;
    return tr;
}

Detection detect(const SimTrace& trace, double nu, double t_arm)
{
    if (!(nu >= 0.0))
        throw DomainError("detector threshold must be nonnegative");
    Detection d;
    d.alarm.resize(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        d.alarm[k] = trace.g[k] > nu ? 1 : 0;
        if (d.alarm[k] && !d.first_alarm && at_or_after(trace.t[k], t_arm))
            d.first_alarm = trace.t[k];
    }
    return d;
}

double calibrate_threshold(const SimTrace& clean, double safety)
{
    if (!(safety > 1.0))
        throw DomainError("safety factor must exceed 1");
    if (clean.attack != "none" && clean.attack != "eavesdrop")
        throw DomainError("threshold calibration needs an attack-free trace");
    double peak = 0.0;
    for (std::size_t k = 0; k < clean.size(); ++k)
        if (at_or_after(clean.t[k], clean.t_settle))
            peak = std::max(peak, clean.g[k]);
    return safety * peak;
}

EstimationMetrics estimation_metrics(const SimTrace& trace)
{
    if (trace.size() == 0)
        throw DomainError("empty trace");
    EstimationMetrics m;
    m.terminal_error = trace.err_norm.back();
    for (std::size_t k = 0; k < trace.size(); ++k)
        if (at_or_after(trace.t[k], trace.t_settle))
            m.sup_error_after_settle = std::max(m.sup_error_after_settle, trace.err_norm[k]);

    const double t_cut = trace.attack_start ? *trace.attack_start : trace.t.back();
    double peak = 0.0;
    for (std::size_t k = 0; k < trace.size() && trace.t[k] <= t_cut; ++k)
        peak = std::max(peak, trace.err_norm[k]);
    if (peak == 0.0)
        return m;

    // The segment ends where the error first reaches the round-off floor.
    const double floor = 1e-10 * peak;
    double st = 0, sy = 0, stt = 0, sty = 0, n = 0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < trace.size() && trace.t[k] <= t_cut; ++k) {
        if (!(trace.err_norm[k] > floor))
            break;
        const double y = std::log(trace.err_norm[k]);
        st += trace.t[k];
        sy += y;
        stt += trace.t[k] * trace.t[k];
        sty += trace.t[k] * y;
        n += 1;
        last = k;
    }
    if (n < 3)
        return m;
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    const double icpt = (sy - slope * st) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (std::size_t k = 0; k <= last; ++k) {
        const double y = std::log(trace.err_norm[k]);
        const double r = y - (icpt + slope * trace.t[k]);
        ss_res += r * r;
        ss_tot += (y - mean) * (y - mean);
    }
    m.rate = -slope;
    m.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    m.fit_t0 = trace.t.front();
    m.fit_t1 = trace.t[last];
    return m;
}

Stealthiness stealthiness_metric(const SimTrace& attacked, const SimTrace& clean)
{
    if (attacked.size() != clean.size() || attacked.dt != clean.dt ||
        (attacked.size() && attacked.t.front() != clean.t.front()))
        throw DomainError("stealthiness needs traces on the same time grid");
    Stealthiness out;
    const double t0 = attacked.attack_start.value_or(attacked.t.empty() ? 0.0 : attacked.t.front());
    for (std::size_t k = 0; k < attacked.size(); ++k) {
        if (!at_or_after(attacked.t[k], t0))
            continue;
        Vector dz = attacked.z[k] - clean.z[k];
        out.sup = std::max(out.sup, dz.norm());
        out.t.push_back(attacked.t[k]);
        out.delta_z.push_back(std::move(dz));
    }
    return out;
}

double sup_innovation(const SimTrace& trace, double t0, double t1)
{
    double sup = 0.0;
    for (std::size_t k = 0; k < trace.size(); ++k)
        if (at_or_after(trace.t[k], t0) && at_or_after(t1, trace.t[k]))
            sup = std::max(sup, trace.z[k].norm());
    return sup;
}

double lyapunov_worst_increase(const SimTrace& trace, const Matrix& p)
{
    double worst = -std::numeric_limits<double>::infinity();
    double v_prev = 0.0;
    bool prev_resolved = false;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const Vector e = trace.estimation_error(k);
        const double scale = std::max(1.0, (trace.xhat[k] + e).norm());
        const bool resolved = e.norm() > kRoundoffError * scale;
        const double v = e.dot(p * e);
        if (k > 0 && resolved && prev_resolved)
            worst = std::max(worst, (v - v_prev) / v_prev);
        v_prev = v;
        prev_resolved = resolved;
    }
    return worst;
}

bool replay_premise_holds(const SimTrace& trace, const ReplayAttack& r, double tol)
{
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const double t = trace.t[k];
        if (at_or_after(t, r.t_start - r.tau) && !at_or_after(t, r.t_start) && !(trace.z[k].norm() < tol))
            return false;
    }
    return true;
}

void write_trace_csv(const SimTrace& trace, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open " + path + " for writing");

    const Eigen::Index ny = trace.y.empty() ? 0 : trace.y.front().size();
    const Eigen::Index na = trace.xa.empty() ? 0 : trace.xa.front().size();
    auto head = [&](const char* name, Eigen::Index n) {
        for (Eigen::Index i = 1; i <= n; ++i)
            out << ',' << name << '_' << i;
    };
    out << 't';
    head("x", trace.nx);
    head("xi", trace.nxi);
    head("xhat", trace.nx);
    head("xihat", trace.nxi);
    head("y", ny);
    head("ybold", ny);
    head("chan", ny);
    head("z", ny);
    out << ",g,alarm,err_norm";
    head("xa", na);
    out << '\n';

    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    auto vec = [&](const auto& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            out << ',';
            num(v(i));
        }
    };
    for (std::size_t k = 0; k < trace.size(); ++k) {
        num(trace.t[k]);
        vec(trace.x[k]);
        vec(trace.xi[k]);
        vec(trace.xhat[k].tail(trace.nx));
        vec(trace.xhat[k].head(trace.nxi));
        vec(trace.y[k]);
        vec(trace.ybold[k]);
        vec(trace.chan[k]);
        vec(trace.z[k]);
        out << ',';
        num(trace.g[k]);
        out << ',' << (trace.alarm.empty() ? 0 : int(trace.alarm[k])) << ',';
        num(trace.err_norm[k]);
        vec(trace.xa[k]);
        out << '\n';
    }
    if (!out)
        throw ConfigError("failed writing " + path);
}

} // namespace chaomask

#include "fedfair/losses.hpp"

#include <cmath>
#include <memory>

namespace fedfair {

void KdConfig::validate(const std::string& key_path) const {
    if (!(temperature > 0.0))
        throw std::invalid_argument(key_path + ".temperature must be positive");
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument(key_path + ".alpha must be in [0, 1]");
}

std::string kind_name(PersonalisationKind kind) {
    switch (kind) {
        case PersonalisationKind::none: return "none";
        case PersonalisationKind::ewc: return "ewc";
        case PersonalisationKind::prox: return "prox";
        case PersonalisationKind::kd: return "kd";
    }
    return "none";
}

void PaflSchedule::validate() const {
    if (segments.empty()) throw std::invalid_argument("schedule must have at least one segment");
    if (segments.front().from_round != 0)
        throw std::invalid_argument("schedule[0].from_round must be 0");
    int prev = -1;
    for (size_t i = 0; i < segments.size(); ++i) {
        const ScheduleSegment& s = segments[i];
        const std::string key = "schedule[" + std::to_string(i) + "]";
        if (s.from_round <= prev)
            throw std::invalid_argument(key + ".from_round must be strictly increasing");
        prev = s.from_round;
        if (s.mu < 0.0 || s.mu > 1.0) throw std::invalid_argument(key + ".mu must be in [0, 1]");
        if (s.kind == PersonalisationKind::ewc || s.kind == PersonalisationKind::prox) {
            if (s.lambda < 0.0) throw std::invalid_argument(key + ".lambda must be non-negative");
        }
        if (s.kind == PersonalisationKind::kd) s.kd.validate(key + ".kd");
    }
}

PaflSchedule fedavg_schedule() {
    PaflSchedule s;
    s.segments.push_back(ScheduleSegment{});
    return s;
}

const ScheduleSegment& schedule_lookup(const PaflSchedule& schedule, int round) {
    if (round < 0) throw std::invalid_argument("schedule_lookup: round must be non-negative");
    if (schedule.segments.empty())
        throw std::invalid_argument("schedule_lookup: empty schedule");
    // Latest segment whose from_round <= round; boundaries are inclusive.
    const ScheduleSegment* hit = nullptr;
    for (const ScheduleSegment& s : schedule.segments) {
        if (s.from_round <= round) hit = &s;
    }
    if (hit == nullptr)
        throw std::invalid_argument("schedule_lookup: no segment covers round 0");
    return *hit;
}

FisherDiag fisher_diagonal(const ParamVector& params, const ModelSpec& spec, const Batch& data,
                           int max_samples, uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("fisher_diagonal: empty data");
    std::vector<size_t> idx;
    if (max_samples > 0 && data.size() > static_cast<size_t>(max_samples)) {
        Rng rng(substream(seed, stream::fisher));
        for (int i : rng.sample_without_replacement(static_cast<int>(data.size()), max_samples))
            idx.push_back(static_cast<size_t>(i));
    } else {
        idx.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) idx[i] = i;
    }

    FisherDiag fisher;
    fisher.values.assign(params.size(), 0.0);
    fisher.sample_count = static_cast<int>(idx.size());
    const CompositeLoss ce = plain_cross_entropy();
    ParamVector g;
    for (size_t i : idx) {
        const Batch one = gather_rows(data, {i});
        loss_and_grad(params, spec, one, ce, g);
        for (size_t j = 0; j < fisher.values.size(); ++j) fisher.values[j] += g[j] * g[j];
    }
    const double inv = 1.0 / static_cast<double>(fisher.sample_count);
    for (double& v : fisher.values) v *= inv;
    return fisher;
}

namespace {

void check_anchor(const ParamVector& c, const ParamVector& anchor, const char* who) {
    if (c.size() != anchor.size())
        throw std::invalid_argument(std::string(who) + ": anchor layout does not match parameters");
}

}  // namespace

double ewc_penalty(const ParamVector& c, const ParamVector& anchor, const FisherDiag& fisher,
                   double lambda, std::vector<double>* grad) {
    check_anchor(c, anchor, "ewc_penalty");
    if (fisher.values.size() != c.size())
        throw std::invalid_argument("ewc_penalty: fisher layout does not match parameters");
    if (lambda < 0.0) throw std::invalid_argument("ewc_penalty: lambda must be non-negative");
    if (grad != nullptr) grad->assign(c.size(), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < c.size(); ++i) {
        const double d = c[i] - anchor[i];
        const double m = fisher.values[i];
        total += 0.5 * lambda * m * d * d;
        if (grad != nullptr) (*grad)[i] = lambda * m * d;
    }
    return total;
}

double prox_penalty(const ParamVector& c, const ParamVector& anchor, double lambda,
                    std::vector<double>* grad) {
    check_anchor(c, anchor, "prox_penalty");
    if (lambda < 0.0) throw std::invalid_argument("prox_penalty: lambda must be non-negative");
    if (grad != nullptr) grad->assign(c.size(), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < c.size(); ++i) {
        const double d = c[i] - anchor[i];
        total += 0.5 * lambda * d * d;
        if (grad != nullptr) (*grad)[i] = lambda * d;
    }
    return total;
}

namespace {

// Mean KL(teacher || student) with both distributions at temperature T.
// Accumulates coeff * d(mean KL)/d(student logits) when grad is non-null and
// returns the unscaled value.
double kl_accumulate(const Matrix& student, const Matrix& teacher, double temperature,
                     double coeff, Matrix* grad) {
    if (teacher.rows != student.rows || teacher.cols != student.cols)
        throw std::invalid_argument("kd_loss: teacher logits shape does not match student");
    const size_t cols = student.cols;
    const double inv_b = 1.0 / static_cast<double>(student.rows);
    std::vector<double> log_ps(cols), log_pt(cols);
    const auto tempered_log_softmax = [&](const double* z, double* lp) {
        double mx = z[0];
        for (size_t j = 0; j < cols; ++j) {
            if (!std::isfinite(z[j])) throw TrainingDiverged("kd_loss: non-finite logit");
            mx = std::max(mx, z[j]);
        }
        double se = 0.0;
        for (size_t j = 0; j < cols; ++j) se += std::exp((z[j] - mx) / temperature);
        const double log_se = std::log(se);
        for (size_t j = 0; j < cols; ++j) lp[j] = (z[j] - mx) / temperature - log_se;
    };
    double total = 0.0;
    for (size_t r = 0; r < student.rows; ++r) {
        tempered_log_softmax(student.row(r), log_ps.data());
        tempered_log_softmax(teacher.row(r), log_pt.data());
        for (size_t j = 0; j < cols; ++j) {
            const double pt = std::exp(log_pt[j]);
            total += pt * (log_pt[j] - log_ps[j]);
            if (grad != nullptr) {
                const double ps = std::exp(log_ps[j]);
                grad->at(r, j) += coeff * ((ps - pt) / temperature * inv_b);
            }
        }
    }
    return total * inv_b;
}

// Coefficients of the blended objective:
//   ce_coeff * CE + kl_coeff * KL_T + anchor_weight * quadratic anchor.
struct BlendTerms {
    double ce_coeff = 1.0;
    double kl_coeff = 0.0;
    double kl_temp = 1.0;
    double anchor_weight = 0.0;
};

BlendTerms blend_terms(const ScheduleSegment& seg) {
    BlendTerms t;
    t.ce_coeff = seg.mu;
    switch (seg.kind) {
        case PersonalisationKind::none:
            break;
        case PersonalisationKind::ewc:
        case PersonalisationKind::prox:
            t.anchor_weight = 1.0 - seg.mu;
            break;
        case PersonalisationKind::kd:
            // The distillation composite carries its own data term, so the
            // blend folds its CE coefficient into the main one.
            t.ce_coeff = seg.mu + (1.0 - seg.mu) * seg.kd.alpha * seg.kd.temperature *
                                      seg.kd.temperature;
            t.kl_coeff = (1.0 - seg.mu) * (1.0 - seg.kd.alpha);
            t.kl_temp = seg.kd.temperature;
            break;
    }
    return t;
}

double blend_data_eval(const BlendTerms& t, const Matrix* teacher_logits, const Matrix& logits,
                       const std::vector<int>& labels, Matrix& grad_logits) {
    double total = t.ce_coeff * cross_entropy_accumulate(logits, labels, t.ce_coeff, &grad_logits);
    if (t.kl_coeff != 0.0) {
        if (teacher_logits == nullptr)
            throw std::invalid_argument("kd term requires teacher logits");
        total += t.kl_coeff *
                 kl_accumulate(logits, *teacher_logits, t.kl_temp, t.kl_coeff, &grad_logits);
    }
    return total;
}

ParamLossFn make_anchor_term(double weight, double lambda, const ParamVector* anchor,
                             const FisherDiag* fisher) {
    if (weight == 0.0 || lambda == 0.0) return {};
    return [weight, lambda, anchor, fisher](const ParamVector& p, std::vector<double>& g) {
        check_anchor(p, *anchor, "anchor term");
        if (fisher != nullptr && fisher->values.size() != p.size())
            throw std::invalid_argument("anchor term: fisher layout does not match parameters");
        double pen = 0.0;
        for (size_t i = 0; i < p.size(); ++i) {
            const double d = p[i] - (*anchor)[i];
            const double m = fisher != nullptr ? fisher->values[i] : 1.0;
            pen += 0.5 * lambda * m * d * d;
            g[i] += weight * (lambda * m * d);
        }
        return weight * pen;
    };
}

CompositeLoss blend_composite(const ScheduleSegment& seg, const BlendTerms& t,
                              const ParamVector* anchor, const FisherDiag* fisher,
                              std::shared_ptr<const Matrix> teacher_logits) {
    CompositeLoss loss;
    loss.data = [t, teacher_logits](const Matrix& logits, const std::vector<int>& labels,
                                    Matrix& grad_logits) {
        return blend_data_eval(t, teacher_logits.get(), logits, labels, grad_logits);
    };
    if (seg.kind == PersonalisationKind::ewc || seg.kind == PersonalisationKind::prox) {
        loss.param = make_anchor_term(
            t.anchor_weight, seg.lambda, anchor,
            seg.kind == PersonalisationKind::ewc ? fisher : nullptr);
    }
    return loss;
}

}  // namespace

double kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
               const std::vector<int>& labels, const KdConfig& cfg, Matrix* grad_logits) {
    cfg.validate("kd");
    if (grad_logits != nullptr) *grad_logits = Matrix(student_logits.rows, student_logits.cols);
    const double ce_coeff = cfg.alpha * cfg.temperature * cfg.temperature;
    double total =
        ce_coeff * cross_entropy_accumulate(student_logits, labels, ce_coeff, grad_logits);
    const double kl_coeff = 1.0 - cfg.alpha;
    if (kl_coeff != 0.0) {
        total += kl_coeff *
                 kl_accumulate(student_logits, teacher_logits, cfg.temperature, kl_coeff,
                               grad_logits);
    }
    return total;
}

double pafl_loss(int round, const ParamVector& params, const ParamVector& global,
                 const ModelSpec& spec, const Batch& batch, const PaflSchedule& schedule,
                 const PaflContext& ctx, ParamVector* grad_out) {
    schedule.validate();
    const ScheduleSegment& seg = schedule_lookup(schedule, round);
    const BlendTerms t = blend_terms(seg);
    if (seg.kind == PersonalisationKind::ewc && t.anchor_weight != 0.0 && seg.lambda != 0.0 &&
        ctx.fisher == nullptr)
        throw std::invalid_argument("pafl_loss: ewc segment requires fisher in the context");
    if (t.kl_coeff != 0.0 && ctx.teacher_logits == nullptr)
        throw std::invalid_argument("pafl_loss: kd segment requires teacher logits in the context");
    check_anchor(params, global, "pafl_loss");

    // Borrowed teacher logits; the shared_ptr carries no ownership.
    std::shared_ptr<const Matrix> teacher(std::shared_ptr<void>(), ctx.teacher_logits);
    const CompositeLoss loss = blend_composite(seg, t, &global, ctx.fisher, teacher);
    if (grad_out != nullptr) return loss_and_grad(params, spec, batch, loss, *grad_out);
    return loss_value(params, spec, batch, loss);
}

MinibatchLoss make_segment_loss(const ScheduleSegment& segment, const ModelSpec& spec,
                                const ParamVector& global, const ParamVector* teacher_params,
                                const FisherDiag* fisher) {
    const BlendTerms t = blend_terms(segment);
    if (segment.kind == PersonalisationKind::ewc && t.anchor_weight != 0.0 &&
        segment.lambda != 0.0 && fisher == nullptr)
        throw std::invalid_argument("segment loss: ewc segment requires a fisher diagonal");
    if (t.kl_coeff != 0.0 && teacher_params == nullptr)
        throw std::invalid_argument("segment loss: kd segment requires teacher parameters");
    const ModelSpec* spec_ptr = &spec;
    const ParamVector* global_ptr = &global;
    return [t, segment, spec_ptr, global_ptr, teacher_params, fisher](const Batch& mb) {
        std::shared_ptr<const Matrix> teacher_logits;
        if (t.kl_coeff != 0.0)
            teacher_logits =
                std::make_shared<const Matrix>(forward(*teacher_params, *spec_ptr, mb.features));
        return blend_composite(segment, t, global_ptr, fisher, std::move(teacher_logits));
    };
}

MinibatchLoss make_finetune_loss() {
    ScheduleSegment seg;  // mu = 1, no personalisation term
    const BlendTerms t = blend_terms(seg);
    return [t, seg](const Batch&) { return blend_composite(seg, t, nullptr, nullptr, nullptr); };
}

MinibatchLoss make_ewc_adapt_loss(const ParamVector& anchor, const FisherDiag& fisher,
                                  double lambda) {
    ScheduleSegment seg;
    seg.mu = 0.0;  // anchor at full strength; the data term keeps weight 1
    seg.kind = PersonalisationKind::ewc;
    seg.lambda = lambda;
    BlendTerms t = blend_terms(seg);
    t.ce_coeff = 1.0;
    const ParamVector* anchor_ptr = &anchor;
    const FisherDiag* fisher_ptr = &fisher;
    return [t, seg, anchor_ptr, fisher_ptr](const Batch&) {
        return blend_composite(seg, t, anchor_ptr, fisher_ptr, nullptr);
    };
}

MinibatchLoss make_kd_adapt_loss(const ModelSpec& spec, const ParamVector& teacher_params,
                                 const KdConfig& cfg) {
    ScheduleSegment seg;
    seg.mu = 0.0;
    seg.kind = PersonalisationKind::kd;
    seg.kd = cfg;
    return make_segment_loss(seg, spec, teacher_params, &teacher_params, nullptr);
}

}  // namespace fedfair

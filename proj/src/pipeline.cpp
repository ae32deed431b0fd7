#include "cda/pipeline.hpp"

#include <cmath>
#include <tuple>

namespace cda
{

WaveformSpec RefinementStep::waveform(double carrier_hz) const
{
    WaveformSpec spec;
    spec.kind = WaveformKind::two_tone_lfm;
    spec.pulse_duration = pulse_duration;
    spec.bandwidth = tone_separation;
    spec.sample_rate = sample_rate;
    spec.carrier_hz = carrier_hz;
    return spec;
}

void StageSchedule::validate() const
{
    for (std::size_t i = 0; i < steps.size(); ++i)
    {
        const auto& s = steps[i];
        if (!(s.sample_rate > 0.0) || !(s.tone_separation > 0.0) || !(s.tdma_window > 0.0) || !(s.pulse_duration > 0.0))
            throw ConfigError("refinement step " + std::to_string(i + 1) + " has non-positive parameters");
        s.waveform(1.0).validate();
        if (i == 0)
            continue;
        const auto& p = steps[i - 1];
        if (s.sample_rate < p.sample_rate || s.tone_separation < p.tone_separation || s.tdma_window > p.tdma_window)
            throw ConfigError("refinement schedule must tighten monotonically (step " + std::to_string(i + 1) + ")");
    }
}

StageSchedule StageSchedule::geometric(const RefinementStep& first, const RefinementStep& last, std::size_t count)
{
    StageSchedule s;
    if (count == 0)
        return s;
    if (count == 1)
    {
        s.steps.push_back(last);
        return s;
    }
    auto interp = [count](double a, double b, std::size_t i) {
        if (i == 0)
            return a;
        if (i + 1 == count)
            return b;
        const double u = static_cast< double >(i) / static_cast< double >(count - 1);
        return a * std::pow(b / a, u);
    };
    for (std::size_t i = 0; i < count; ++i)
    {
        RefinementStep r;
        r.sample_rate = interp(first.sample_rate, last.sample_rate, i);
        r.tone_separation = interp(first.tone_separation, last.tone_separation, i);
        r.tdma_window = interp(first.tdma_window, last.tdma_window, i);
        r.pulse_duration = interp(first.pulse_duration, last.pulse_duration, i);
        s.steps.push_back(r);
    }
    return s;
}

StageSchedule StageSchedule::standard()
{
    const RefinementStep first{5e6, 2e6, 10e-3, 200.0 / 5e6};
    const RefinementStep last{200e6, 40e6, 5e-6, 200.0 / 200e6};
    return geometric(first, last, 5);
}

TdmaPlan TdmaPlan::build(std::size_t transmissions, double tdma_window, double pulse_duration, double max_propagation,
                         double guard, double min_epoch_period)
{
    TdmaPlan plan;
    plan.slot_width = 2.0 * tdma_window + pulse_duration + max_propagation + guard;
    plan.slot_offsets.reserve(transmissions);
    for (std::size_t i = 0; i < transmissions; ++i)
        plan.slot_offsets.push_back(static_cast< double >(i) * plan.slot_width);
    plan.epoch_period = std::max(min_epoch_period, static_cast< double >(transmissions) * plan.slot_width);
    return plan;
}

void TdmaPlan::validate(double tdma_window, double pulse_duration, double max_propagation, double guard) const
{
    if (slot_width < 2.0 * tdma_window + pulse_duration + max_propagation + guard)
        throw Error("TDMA slot narrower than window + pulse + propagation + guard");
    for (std::size_t i = 1; i < slot_offsets.size(); ++i)
        if (slot_offsets[i] < slot_offsets[i - 1] + slot_width * (1.0 - 1e-12))
            throw Error("TDMA slots overlap");
    if (!slot_offsets.empty() && slot_offsets.back() + slot_width > epoch_period * (1.0 + 1e-12))
        throw Error("TDMA slots exceed the epoch period");
}

void ControlNetworkModel::validate() const
{
    if (!(latency_mean >= 0.0) || !(latency_jitter >= 0.0) || !(retransmit_timeout >= 0.0))
        throw ConfigError("control network latencies must be non-negative");
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
        throw ConfigError("control network loss probability must be in [0, 1]");
}

std::vector< double > SyncReport::mean_abs_error(std::size_t nodes) const
{
    std::vector< double > sum(nodes, 0.0);
    std::vector< std::size_t > count(nodes, 0);
    for (const auto& r : rows)
    {
        sum.at(r.node) += std::abs(r.est_error);
        ++count.at(r.node);
    }
    for (std::size_t i = 0; i < nodes; ++i)
        sum[i] = count[i] > 0 ? sum[i] / static_cast< double >(count[i]) : 0.0;
    return sum;
}

std::vector< double > SyncReport::max_abs_error(std::size_t nodes) const
{
    std::vector< double > worst(nodes, 0.0);
    for (const auto& r : rows)
        worst.at(r.node) = std::max(worst.at(r.node), std::abs(r.est_error));
    return worst;
}

SyncEngine::SyncEngine(World world, Graph graph, SyncOptions options)
    : world_(std::move(world)), graph_(std::move(graph)), options_(options)
{
    if (graph_.size() != world_.size())
        throw ConfigError("graph and world disagree on node count");
    if (world_.size() < 2)
        throw ConfigError("synchronization needs at least two nodes");
    if (options_.aggregator >= world_.size())
        throw ConfigError("aggregator node out of range");
    if (!(options_.smoothing >= 0.0 && options_.smoothing < 1.0))
        throw ConfigError("smoothing must be in [0, 1)");
    options_.control.validate();
    weights_ = build_weights(graph_);
}

Eigen::VectorXd SyncEngine::coarse_align()
{
    const auto& net = options_.control;
    RandomStream& rng = world_.rng();
    const NodeId agg = options_.aggregator;
    const auto n = static_cast< Eigen::Index >(world_.size());
    Eigen::VectorXd corrections = Eigen::VectorXd::Zero(n);

    auto deliver = [&](NodeId who) {
        double spent = 0.0;
        for (std::size_t attempt = 0; attempt <= net.max_retries; ++attempt)
        {
            if (!rng.bernoulli(net.loss_probability))
                return spent + net.latency_mean + rng.uniform(0.0, 1.0) * net.latency_jitter;
            spent += net.retransmit_timeout;
        }
        throw UnreachableNode("node " + std::to_string(who) + " unreachable on the control network");
    };

    // Request/response exchanges with the aggregator, one node at a time.
    double t = world_.now();
    for (NodeId i = 0; i < world_.size(); ++i)
    {
        if (i == agg)
            continue;
        Clock& mine = world_.node(i).clock;
        Clock& theirs = world_.node(agg).clock;
        const double t1 = mine.read(t, rng);
        t += deliver(i);
        const double t2 = theirs.read(t, rng);
        const double t3 = t2;
        t += deliver(i);
        const double t4 = mine.read(t, rng);
        const double theta = 0.5 * ((t2 - t1) + (t3 - t4));
        corrections[static_cast< Eigen::Index >(i)] = theta;
        mine.apply_correction(theta);
    }
    world_.advance_to(t);
    return corrections;
}

const RfChain& SyncEngine::chain_for(const RefinementStep& step)
{
    const auto key = std::make_tuple(step.sample_rate, step.tone_separation, step.pulse_duration);
    auto it = chains_.find(key);
    if (it != chains_.end())
        return it->second;
    BiasTrainingOptions training;
    training.snr_db = options_.bias_snr_db;
    training.averages = options_.bias_averages;
    training.qls_window = options_.qls_window;
    training.seed = mix_seed(world_.rng().seed(), {0xb1a5ULL, static_cast< std::uint64_t >(step.sample_rate)});
    RfChain chain = RfChain::make(step.waveform(options_.carrier_hz), options_.bias_points, training,
                                  options_.detection_threshold_db);
    return chains_.emplace(key, std::move(chain)).first->second;
}

bool SyncEngine::fits(double tdma_window, double sample_rate) const
{
    const double margin = world_.max_propagation_delay() + options_.guard_samples / sample_rate;
    return world_.max_pairwise_offset(world_.now()) < tdma_window - margin;
}

void SyncEngine::run_epoch(const RfChain& chain, double tdma_window, double convergence, SyncReport& report)
{
    const std::size_t epoch = ++epoch_;
    const auto n = static_cast< Eigen::Index >(world_.size());
    const double pulse = static_cast< double >(chain.pulse.size()) / chain.spec.sample_rate;
    const double guard = options_.guard_samples / chain.spec.sample_rate;

    const auto& edges = graph_.edges();
    const TdmaPlan plan = TdmaPlan::build(2 * edges.size(), tdma_window, pulse, world_.max_propagation_delay(), guard,
                                          options_.epoch_period);
    plan.validate(tdma_window, pulse, world_.max_propagation_delay(), guard);

    // The aggregator announces the epoch start in its own time base; every
    // node then schedules its slots against its own clock.
    const double t_start = world_.now();
    const double epoch_local = world_.node(options_.aggregator).clock.read_noiseless(t_start) + options_.epoch_lead;
    const Eigen::VectorXd truth = world_.offsets(t_start);

    Eigen::MatrixXd bias = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd w = weights_;
    std::size_t slot = 0;
    for (const auto& [a, b] : edges)
    {
        const SlotTiming fwd{epoch_local + plan.slot_offsets[slot], tdma_window, plan.slot_width};
        const SlotTiming rev{epoch_local + plan.slot_offsets[slot + 1], tdma_window, plan.slot_width};
        slot += 2;
        try
        {
            const TimestampQuad q = exchange(a, b, chain, world_, fwd, rev, epoch);
            const PairEstimate est = estimate_pair(q);
            bias(static_cast< Eigen::Index >(b), static_cast< Eigen::Index >(a)) = est.offset;
            bias(static_cast< Eigen::Index >(a), static_cast< Eigen::Index >(b)) = -est.offset;
            report.pairs.push_back(est);
            latest_[{a, b}] = est;
        }
        catch (const LostExchange&)
        {
            ++report.lost_exchanges;
            drop_pair(w, a, b);
        }
    }

    if (options_.smoothing > 0.0 && smoothed_.rows() == n)
        bias = (1.0 - options_.smoothing) * bias + options_.smoothing * smoothed_;
    smoothed_ = bias;

    const Eigen::VectorXd corrections = consensus_step(bias, w);
    const Eigen::VectorXd ideal = consensus_step(bias_matrix_from_times(truth), w);
    last_bias_ = bias;
    last_weights_ = w;

    // Corrections reach the nodes once the timestamps have been shared over
    // the control network.
    const double t_apply = t_start + options_.epoch_lead + static_cast< double >(2 * edges.size()) * plan.slot_width +
                           options_.control.latency_mean;
    Eigen::VectorXd after = world_.offsets(t_apply) + corrections;
    after.array() -= after.mean();
    for (NodeId i = 0; i < world_.size(); ++i)
        world_.node(i).clock.apply_correction(corrections[static_cast< Eigen::Index >(i)]);

    const double mean = truth.mean();
    for (Eigen::Index i = 0; i < n; ++i)
    {
        SyncRecord r;
        r.epoch = epoch;
        r.node = static_cast< NodeId >(i);
        r.true_offset = truth[i] - mean;
        r.correction = corrections[i];
        r.est_error = corrections[i] - ideal[i];
        r.converged = std::abs(after[i]) < convergence;
        report.rows.push_back(r);
    }
    world_.advance_to(t_start + std::max(plan.epoch_period + options_.epoch_lead, t_apply - t_start));
}

SyncReport SyncEngine::run_refinement(const StageSchedule& schedule)
{
    schedule.validate();
    SyncReport report;
    for (std::size_t i = 0; i < schedule.steps.size(); ++i)
    {
        const RefinementStep& step = schedule.steps[i];
        if (!fits(step.tdma_window, step.sample_rate))
            throw RefinementDivergence(i + 1, "clock offsets exceed the capture window of " +
                                                  std::to_string(step.tdma_window) + " s");
        run_epoch(chain_for(step), step.tdma_window, 1.0 / step.sample_rate, report);
        ++steps_run_;
    }
    const RefinementStep& next = options_.fine;
    if (!schedule.steps.empty() && !fits(next.tdma_window, next.sample_rate))
        throw RefinementDivergence(schedule.steps.size(), "residual offsets exceed the fine-stage window of " +
                                                              std::to_string(next.tdma_window) + " s");
    return report;
}

SyncReport SyncEngine::run_fine_loop(std::size_t epochs)
{
    SyncReport report;
    if (epochs == 0)
        return report;
    const RefinementStep& step = options_.fine;
    if (!fits(step.tdma_window, step.sample_rate))
        throw RefinementDivergence(steps_run_ + 1, "clock offsets exceed the fine-stage window");
    const RfChain& chain = chain_for(step);
    for (std::size_t k = 0; k < epochs; ++k)
        run_epoch(chain, step.tdma_window, options_.fine_convergence, report);
    return report;
}

} // namespace cda

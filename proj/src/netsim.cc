#include "kcs/netsim.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>

#include "kcs/rng.h"

namespace kcs {
namespace {

enum class Phase : int { kDeparture = 0, kArrival = 1 };

struct Event {
  Micros time;
  Phase phase;
  std::uint64_t counter;
  std::size_t packet;  // index into the run's packet table

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (phase != o.phase) return phase > o.phase;
    return counter > o.counter;
  }
};

struct SimPacket {
  Packet packet;
  int attempt = 0;  // 0 for the first transmission
  std::size_t keystroke_index = 0;
};

class Simulator {
 public:
  Simulator(const ChannelConfig& config, std::span<const Packet> keystrokes,
            bool record_log)
      : config_(config), keystrokes_(keystrokes), record_log_(record_log) {
    counters_.flows.resize(config.sources.size() + 1);
    for (std::size_t f = 0; f < counters_.flows.size(); ++f) {
      counters_.flows[f].flow_id = static_cast<int>(f);
    }
    link_arrival_.assign(keystrokes.size(), 0);
    attempts_.assign(keystrokes.size(), 1);
  }

  ChannelRun Run() {
    SeedArrivals();
    while (!events_.empty()) {
      const Event e = events_.top();
      events_.pop();
      if (e.phase == Phase::kDeparture) {
        Depart(e.time);
      } else {
        Arrive(e.time, e.packet);
      }
    }
    ChannelRun run;
    run.deliveries = ReleaseInOrder();
    run.counters = counters_;
    run.stats = ComputeChannelStats(run.deliveries, counters_, config_);
    if (record_log_) {
      std::stable_sort(log_.begin(), log_.end(),
                       [](const LogEntry& a, const LogEntry& b) {
                         return a.time_us < b.time_us;
                       });
      run.log = std::move(log_);
    }
    return run;
  }

 private:
  void SeedArrivals() {
    const Micros last_inject =
        keystrokes_.empty() ? 0 : keystrokes_.back().inject_us;
    const Micros horizon = last_inject + config_.tail_us;
    std::vector<std::size_t> initial;
    for (std::size_t i = 0; i < keystrokes_.size(); ++i) {
      Packet p = keystrokes_[i];
      p.flow_id = kKeystrokeFlow;
      packets_.push_back({p, 0, i});
    }
    for (std::size_t s = 0; s < config_.sources.size(); ++s) {
      for (Packet& p : GenerateSource(config_.sources[s], horizon,
                                      static_cast<int>(s + 1))) {
        packets_.push_back({std::move(p), 0, 0});
      }
    }
    initial.resize(packets_.size());
    for (std::size_t i = 0; i < initial.size(); ++i) initial[i] = i;
    std::stable_sort(initial.begin(), initial.end(),
                     [&](std::size_t a, std::size_t b) {
                       const Packet& pa = packets_[a].packet;
                       const Packet& pb = packets_[b].packet;
                       if (pa.inject_us != pb.inject_us) {
                         return pa.inject_us < pb.inject_us;
                       }
                       if (pa.flow_id != pb.flow_id) return pa.flow_id < pb.flow_id;
                       return pa.seq < pb.seq;
                     });
    for (std::size_t idx : initial) {
      const Packet& p = packets_[idx].packet;
      FlowCounters& fc = counters_.flows[p.flow_id];
      if (fc.original_packets == 0) fc.first_inject_us = p.inject_us;
      fc.last_inject_us = std::max(fc.last_inject_us, p.inject_us);
      ++fc.original_packets;
      fc.original_bits += static_cast<std::int64_t>(p.size_bytes) * 8;
      Push(p.inject_us, Phase::kArrival, idx);
    }
    if (!initial.empty()) {
      counters_.first_arrival_us = packets_[initial.front()].packet.inject_us;
    }
  }

  void Push(Micros time, Phase phase, std::size_t packet) {
    events_.push({time, phase, counter_++, packet});
  }

  void Log(Micros t, LogEvent ev, const Packet& p, int queue_len) {
    if (record_log_) log_.push_back({t, ev, p.flow_id, p.seq, queue_len});
  }

  int Waiting() const { return static_cast<int>(queue_.size()); }

  void StartService(Micros t, std::size_t idx) {
    busy_ = true;
    in_service_ = idx;
    Push(t + ServiceTimeUs(packets_[idx].packet.size_bytes, config_),
         Phase::kDeparture, idx);
  }

  void Arrive(Micros t, std::size_t idx) {
    const SimPacket& sp = packets_[idx];
    const Packet& p = sp.packet;
    FlowCounters& fc = counters_.flows[p.flow_id];
    ++fc.offered_packets;
    Log(t, sp.attempt > 0 ? LogEvent::kRetransmit : LogEvent::kInject, p,
        Waiting());
    if (!busy_) {
      Log(t, LogEvent::kEnqueue, p, Waiting());
      StartService(t, idx);
      return;
    }
    if (Waiting() < config_.queue_capacity_pkts) {
      queue_.push_back(idx);
      counters_.max_queue_len = std::max(counters_.max_queue_len, Waiting());
      Log(t, LogEvent::kEnqueue, p, Waiting());
      return;
    }
    ++fc.dropped_packets;
    Log(t, LogEvent::kDrop, p, Waiting());
    if (p.flow_id == kKeystrokeFlow) {
      const Micros rto = std::min(
          config_.rto_max_us,
          config_.rto_initial_us << std::min(sp.attempt, 40));
      SimPacket retry = sp;
      ++retry.attempt;
      attempts_[retry.keystroke_index] = retry.attempt + 1;
      packets_.push_back(retry);
      Push(t + std::max<Micros>(rto, 1), Phase::kArrival, packets_.size() - 1);
    }
  }

  void Depart(Micros t) {
    const SimPacket& sp = packets_[in_service_];
    counters_.delivered_wire_bits +=
        static_cast<std::int64_t>(sp.packet.size_bytes +
                                  config_.wire_overhead_bytes) *
        8;
    counters_.last_departure_us = t;
    if (sp.packet.flow_id == kKeystrokeFlow) {
      link_arrival_[sp.keystroke_index] = t + config_.base_propagation_us;
    }
    const Packet departed = sp.packet;
    busy_ = false;
    if (!queue_.empty()) {
      const std::size_t next = queue_.front();
      queue_.pop_front();
      StartService(t, next);
    }
    Log(t, LogEvent::kDepart, departed, Waiting());
  }

  std::vector<Delivery> ReleaseInOrder() {
    std::vector<Delivery> out;
    out.reserve(keystrokes_.size());
    Micros previous = 0;
    for (std::size_t i = 0; i < keystrokes_.size(); ++i) {
      Delivery d;
      d.seq = keystrokes_[i].seq;
      d.inject_us = keystrokes_[i].inject_us;
      d.deliver_us =
          i == 0 ? link_arrival_[i] : std::max(link_arrival_[i], previous + 1);
      d.link_delay_us = d.deliver_us - d.inject_us;
      d.attempts = attempts_[i];
      d.retransmitted = attempts_[i] > 1;
      previous = d.deliver_us;
      if (record_log_) {
        log_.push_back({d.deliver_us, LogEvent::kDeliver, kKeystrokeFlow, d.seq,
                        0});
      }
      out.push_back(d);
    }
    return out;
  }

  const ChannelConfig& config_;
  std::span<const Packet> keystrokes_;
  bool record_log_;

  std::vector<SimPacket> packets_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t counter_ = 0;
  std::deque<std::size_t> queue_;
  bool busy_ = false;
  std::size_t in_service_ = 0;

  std::vector<Micros> link_arrival_;
  std::vector<int> attempts_;
  LinkCounters counters_;
  std::vector<LogEntry> log_;
};

}  // namespace

void CheckSource(const TrafficSourceSpec& s, const std::string& name) {
  if (!(s.rate_pps > 0) || !std::isfinite(s.rate_pps)) {
    throw ConfigError(name + ".rate_pps must be > 0");
  }
  if (s.size_bytes < 1) throw ConfigError(name + ".size_bytes must be >= 1");
  if (s.kind == SourceKind::kOnOff) {
    if (!(s.on_ms > 0)) throw ConfigError(name + ".on_ms must be > 0");
    if (!(s.off_ms >= 0)) throw ConfigError(name + ".off_ms must be >= 0");
  }
  if (s.start_us < 0) throw ConfigError(name + ".start_us must be >= 0");
}

void CheckChannelConfig(const ChannelConfig& c) {
  if (c.bottleneck_bps <= 0) throw ConfigError("bottleneck_bps must be > 0");
  if (c.queue_capacity_pkts < 1) {
    throw ConfigError("queue_capacity_pkts must be >= 1");
  }
  if (c.base_propagation_us < 0) {
    throw ConfigError("base_propagation_us must be >= 0");
  }
  if (c.wire_overhead_bytes < 0) {
    throw ConfigError("wire_overhead_bytes must be >= 0");
  }
  if (c.rto_initial_us <= 0) throw ConfigError("rto_initial_us must be > 0");
  if (c.rto_max_us < c.rto_initial_us) {
    throw ConfigError("rto_max_us must be >= rto_initial_us");
  }
  if (c.tail_us < 0) throw ConfigError("tail_us must be >= 0");
  for (std::size_t i = 0; i < c.sources.size(); ++i) {
    CheckSource(c.sources[i], "sources[" + std::to_string(i) + "]");
  }
}

Micros ServiceTimeUs(int size_bytes, const ChannelConfig& config) {
  const std::int64_t bits =
      static_cast<std::int64_t>(size_bytes + config.wire_overhead_bytes) * 8;
  return std::max<Micros>(
      1, DivRoundHalfUp(bits * kMicrosPerSecond, config.bottleneck_bps));
}

double OfferedBitrate(const TrafficSourceSpec& spec) {
  return spec.rate_pps * spec.size_bytes * 8.0;
}

Micros InterArrivalUs(double rate_pps) {
  return std::max<Micros>(
      1, static_cast<Micros>(std::floor(1e6 / rate_pps + 0.5)));
}

std::vector<Packet> GenerateCbr(const TrafficSourceSpec& spec, Micros horizon_us,
                                int flow_id) {
  std::vector<Packet> out;
  const Micros interval = InterArrivalUs(spec.rate_pps);
  const Micros end = std::min(spec.stop_us, horizon_us);
  std::int64_t seq = 0;
  for (Micros t = spec.start_us; t < end; t += interval) {
    out.push_back({flow_id, seq++, spec.size_bytes, t, std::nullopt});
  }
  return out;
}

std::vector<Packet> GenerateOnOff(const TrafficSourceSpec& spec,
                                  Micros horizon_us, int flow_id) {
  std::vector<Packet> out;
  const Micros interval = InterArrivalUs(spec.rate_pps);
  const Micros end = std::min(spec.stop_us, horizon_us);
  Rng rng(spec.phase_seed);
  auto on_duration = [&] {
    return std::max<Micros>(1, RoundMicros(rng.Exponential(spec.on_ms * 1000)));
  };
  auto off_duration = [&] {
    return spec.off_ms > 0 ? RoundMicros(rng.Exponential(spec.off_ms * 1000))
                           : Micros{0};
  };
  Micros on_start = spec.start_us;
  Micros on_end = on_start + on_duration();
  std::int64_t seq = 0;
  for (Micros t = spec.start_us; t < end; t += interval) {
    while (t >= on_end) {
      on_start = on_end + off_duration();
      on_end = on_start + on_duration();
    }
    if (t >= on_start) {
      out.push_back({flow_id, seq++, spec.size_bytes, t, std::nullopt});
    }
  }
  return out;
}

std::vector<Packet> GenerateSource(const TrafficSourceSpec& spec,
                                   Micros horizon_us, int flow_id) {
  return spec.kind == SourceKind::kCbr ? GenerateCbr(spec, horizon_us, flow_id)
                                       : GenerateOnOff(spec, horizon_us, flow_id);
}

ChannelRun RunChannel(const ChannelConfig& config,
                      std::span<const Packet> keystroke_packets,
                      bool record_log) {
  CheckChannelConfig(config);
  for (std::size_t i = 1; i < keystroke_packets.size(); ++i) {
    if (keystroke_packets[i].inject_us < keystroke_packets[i - 1].inject_us) {
      throw Error("keystroke packets must be ordered by inject time");
    }
  }
  return Simulator(config, keystroke_packets, record_log).Run();
}

ChannelStats ComputeChannelStats(std::span<const Delivery> deliveries,
                                 const LinkCounters& counters,
                                 const ChannelConfig& config) {
  ChannelStats s;
  if (!deliveries.empty()) {
    double sum = 0;
    for (const Delivery& d : deliveries) sum += d.link_delay_us;
    s.avg_delay_us = sum / deliveries.size();
    double sq = 0;
    for (const Delivery& d : deliveries) {
      sq += (d.link_delay_us - s.avg_delay_us) * (d.link_delay_us - s.avg_delay_us);
    }
    s.sd_delay_us = std::sqrt(sq / deliveries.size());
    if (deliveries.size() > 1) {
      double jitter = 0;
      for (std::size_t i = 1; i < deliveries.size(); ++i) {
        jitter += std::abs(static_cast<double>(deliveries[i].link_delay_us -
                                               deliveries[i - 1].link_delay_us));
      }
      s.jitter_us = jitter / (deliveries.size() - 1);
    }
  }
  for (const FlowCounters& fc : counters.flows) {
    s.offered_packets += fc.offered_packets;
    s.dropped_packets += fc.dropped_packets;
    if (fc.flow_id == kKeystrokeFlow) {
      s.retransmissions += fc.offered_packets - fc.original_packets;
    }
    FlowRate rate{fc.flow_id, 0};
    if (fc.original_packets > 1 && fc.last_inject_us > fc.first_inject_us) {
      const double per_packet =
          static_cast<double>(fc.original_bits) / fc.original_packets;
      rate.offered_bps = per_packet * (fc.original_packets - 1) * 1e6 /
                         (fc.last_inject_us - fc.first_inject_us);
    }
    s.offered_bitrate.push_back(rate);
  }
  if (s.offered_packets > 0) {
    s.link_loss_pct = 100.0 * s.dropped_packets / s.offered_packets;
  }
  const Micros active = counters.last_departure_us - counters.first_arrival_us;
  if (active > 0) {
    s.utilization = counters.delivered_wire_bits /
                    (static_cast<double>(config.bottleneck_bps) * active / 1e6);
  }
  s.max_queue_len = counters.max_queue_len;
  return s;
}

std::string_view ToString(LogEvent event) {
  switch (event) {
    case LogEvent::kInject:
      return "inject";
    case LogEvent::kEnqueue:
      return "enqueue";
    case LogEvent::kDrop:
      return "drop";
    case LogEvent::kDepart:
      return "depart";
    case LogEvent::kDeliver:
      return "deliver";
    case LogEvent::kRetransmit:
      return "retransmit";
  }
  return "unknown";
}

std::string EventLogToCsv(std::span<const LogEntry> log) {
  std::string out = "time_us,event,flow_id,seq,queue_len\n";
  for (const LogEntry& e : log) {
    out += std::to_string(e.time_us) + ',' + std::string(ToString(e.event)) +
           ',' + std::to_string(e.flow_id) + ',' + std::to_string(e.seq) + ',' +
           std::to_string(e.queue_len) + '\n';
  }
  return out;
}

}  // namespace kcs

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcs/common.h"

namespace kcs {

// Flow 0 carries keystroke events; cross-traffic source i uses flow i + 1.
constexpr int kKeystrokeFlow = 0;
constexpr Micros kForever = std::numeric_limits<Micros>::max() / 4;

struct Packet {
  int flow_id = kKeystrokeFlow;
  std::int64_t seq = 0;
  int size_bytes = 1;
  Micros inject_us = 0;
  std::optional<std::size_t> payload_ref;
};

enum class SourceKind { kCbr, kOnOff };

struct TrafficSourceSpec {
  SourceKind kind = SourceKind::kCbr;
  double rate_pps = 1;  // CBR rate, or the rate while ON
  int size_bytes = 1024;
  double on_ms = 0;     // mean ON duration (ONOFF)
  double off_ms = 0;    // mean OFF duration (ONOFF)
  Micros start_us = 0;
  Micros stop_us = kForever;
  std::uint64_t phase_seed = 0;
};

struct ChannelConfig {
  std::int64_t bottleneck_bps = 1000000;
  int queue_capacity_pkts = 50;  // waiting room, excluding the packet in service
  Micros base_propagation_us = 0;
  // Header and framing bytes added to every packet on the bottleneck wire.
  int wire_overhead_bytes = 0;
  std::vector<TrafficSourceSpec> sources;
  Micros rto_initial_us = 200000;
  Micros rto_max_us = 2000000;
  std::uint64_t seed = 0;
  // Cross traffic runs until this long after the last keystroke injection.
  Micros tail_us = 5 * kMicrosPerSecond;
};

// Throws ConfigError naming the offending field.
void CheckChannelConfig(const ChannelConfig& config);
void CheckSource(const TrafficSourceSpec& spec, const std::string& name);

struct Delivery {
  std::int64_t seq = 0;
  Micros inject_us = 0;
  Micros deliver_us = 0;     // release to the application, in sequence order
  Micros link_delay_us = 0;  // deliver_us - inject_us
  bool retransmitted = false;
  int attempts = 1;
};

struct FlowCounters {
  int flow_id = 0;
  std::int64_t offered_packets = 0;  // every arrival at the link, incl. retries
  std::int64_t original_packets = 0;
  std::int64_t original_bits = 0;    // payload bits of first transmissions
  std::int64_t dropped_packets = 0;
  Micros first_inject_us = 0;
  Micros last_inject_us = 0;
};

struct LinkCounters {
  std::vector<FlowCounters> flows;  // index = flow_id
  std::int64_t delivered_wire_bits = 0;
  Micros first_arrival_us = 0;
  Micros last_departure_us = 0;
  int max_queue_len = 0;
};

struct FlowRate {
  int flow_id = 0;
  double offered_bps = 0;
};

struct ChannelStats {
  double avg_delay_us = 0;
  double sd_delay_us = 0;
  double jitter_us = 0;
  double link_loss_pct = 0;
  double utilization = 0;
  std::int64_t offered_packets = 0;
  std::int64_t dropped_packets = 0;
  std::int64_t retransmissions = 0;
  int max_queue_len = 0;
  std::vector<FlowRate> offered_bitrate;
};

enum class LogEvent { kInject, kEnqueue, kDrop, kDepart, kDeliver, kRetransmit };

struct LogEntry {
  Micros time_us = 0;
  LogEvent event = LogEvent::kInject;
  int flow_id = 0;
  std::int64_t seq = 0;
  int queue_len = 0;  // packets waiting after the event
};

struct ChannelRun {
  std::vector<Delivery> deliveries;  // one per keystroke packet, by seq
  LinkCounters counters;
  ChannelStats stats;
  std::vector<LogEntry> log;  // empty unless requested
};

// Wire serialization time, rounded half up, at least 1 us.
Micros ServiceTimeUs(int size_bytes, const ChannelConfig& config);

// Nominal payload bitrate of a source while active: rate * size * 8.
double OfferedBitrate(const TrafficSourceSpec& spec);

// Inter-arrival of a source, 1e6 / rate rounded half up.
Micros InterArrivalUs(double rate_pps);

std::vector<Packet> GenerateCbr(const TrafficSourceSpec& spec, Micros horizon_us,
                                int flow_id = 1);

// Exponential ON/OFF phases (seeded by phase_seed) gating a CBR grid
// anchored at start_us. With off_ms == 0 the output equals GenerateCbr.
std::vector<Packet> GenerateOnOff(const TrafficSourceSpec& spec,
                                  Micros horizon_us, int flow_id = 1);

std::vector<Packet> GenerateSource(const TrafficSourceSpec& spec,
                                   Micros horizon_us, int flow_id);

// Single-server FIFO bottleneck with a drop-tail buffer. Keystroke packets
// (ordered by inject time) are retransmitted after a drop with exponential
// RTO backoff and released to the receiver in sequence order; cross traffic
// is fire-and-forget. Events at equal times run departures first, then
// arrivals in insertion order.
ChannelRun RunChannel(const ChannelConfig& config,
                      std::span<const Packet> keystroke_packets,
                      bool record_log = false);

// Delay, jitter and sd over the keystroke deliveries; loss and
// utilization over every flow at the link.
ChannelStats ComputeChannelStats(std::span<const Delivery> deliveries,
                                 const LinkCounters& counters,
                                 const ChannelConfig& config);

std::string_view ToString(LogEvent event);
std::string EventLogToCsv(std::span<const LogEntry> log);

}  // namespace kcs

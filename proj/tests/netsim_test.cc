#include "kcs/netsim.h"

#include <gtest/gtest.h>

#include <map>
#include <random>

#include "oracles/channel_oracle.h"

namespace kcs {
namespace {

std::vector<Packet> KeyPackets(std::initializer_list<Micros> times,
                               int size = 100) {
  std::vector<Packet> out;
  std::int64_t seq = 0;
  for (Micros t : times) out.push_back({kKeystrokeFlow, seq++, size, t, {}});
  return out;
}

TrafficSourceSpec Cbr(double rate, int size, Micros start = 0,
                      Micros stop = kForever) {
  TrafficSourceSpec s;
  s.rate_pps = rate;
  s.size_bytes = size;
  s.start_us = start;
  s.stop_us = stop;
  return s;
}

TEST(RunChannelTest, IdleLinkSerializationDelay) {
  ChannelConfig c;
  const auto run = RunChannel(c, KeyPackets({0}));
  ASSERT_EQ(run.deliveries.size(), 1u);
  EXPECT_EQ(run.deliveries[0].link_delay_us, 800);
}

TEST(RunChannelTest, SimultaneousPacketsQueueFifo) {
  ChannelConfig c;
  const auto run = RunChannel(c, KeyPackets({0, 0}));
  EXPECT_EQ(run.deliveries[0].link_delay_us, 800);
  EXPECT_EQ(run.deliveries[1].link_delay_us, 1600);
}

TEST(RunChannelTest, ConstantDelayChannel) {
  ChannelConfig c;
  c.base_propagation_us = 12345;
  c.wire_overhead_bytes = 72;
  const auto run = RunChannel(c, KeyPackets({0, 5000, 10000, 90000}));
  for (const auto& d : run.deliveries) {
    EXPECT_EQ(d.link_delay_us, ServiceTimeUs(100, c) + 12345);
  }
  EXPECT_EQ(run.stats.sd_delay_us, 0.0);
  EXPECT_EQ(run.stats.jitter_us, 0.0);
  EXPECT_EQ(run.stats.link_loss_pct, 0.0);
}

TEST(RunChannelTest, RejectsUnorderedInput) {
  EXPECT_THROW(RunChannel(ChannelConfig{}, KeyPackets({10, 5})), Error);
}

TEST(RunChannelTest, RejectsInvalidConfigNamingField) {
  ChannelConfig c;
  c.queue_capacity_pkts = 0;
  try {
    RunChannel(c, KeyPackets({0}));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("queue_capacity_pkts"),
              std::string::npos);
  }
  c = ChannelConfig{};
  c.sources.push_back(Cbr(0, 100));
  EXPECT_THROW(RunChannel(c, KeyPackets({0})), ConfigError);
}

TEST(RunChannelTest, DropsRetransmitWithBackoff) {
  // One-slot buffer: the third simultaneous packet is dropped and retried
  // after the initial RTO.
  ChannelConfig c;
  c.queue_capacity_pkts = 1;
  c.rto_initial_us = 10000;
  c.rto_max_us = 15000;
  const auto run = RunChannel(c, KeyPackets({0, 0, 0}), true);
  EXPECT_EQ(run.deliveries[2].attempts, 2);
  EXPECT_TRUE(run.deliveries[2].retransmitted);
  EXPECT_EQ(run.deliveries[2].deliver_us, 10000 + 800);
  EXPECT_EQ(run.stats.retransmissions, 1);
  EXPECT_EQ(run.stats.dropped_packets, 1);
}

TEST(RunChannelTest, BackoffDoublesUpToCap) {
  // A saturating CBR stream keeps the buffer full so retries keep failing.
  ChannelConfig c;
  c.queue_capacity_pkts = 1;
  c.rto_initial_us = 1000;
  c.rto_max_us = 3000;
  c.tail_us = 100000;
  c.sources.push_back(Cbr(100000, 125, 0, 20000));  // 1 pkt/10us, 1 ms service
  const auto run = RunChannel(c, KeyPackets({15}), true);
  std::vector<Micros> retries;
  for (const auto& e : run.log) {
    if (e.flow_id == kKeystrokeFlow && e.event == LogEvent::kRetransmit) {
      retries.push_back(e.time_us);
    }
  }
  ASSERT_GE(retries.size(), 4u);
  EXPECT_EQ(retries[0], 15 + 1000);
  EXPECT_EQ(retries[1], retries[0] + 2000);
  EXPECT_EQ(retries[2], retries[1] + 3000);
  EXPECT_EQ(retries[3], retries[2] + 3000);
}

TEST(RunChannelTest, HeadOfLineBlocking) {
  ChannelConfig c;
  c.queue_capacity_pkts = 1;
  c.rto_initial_us = 50000;
  // Packet 2 is dropped; 3 arrives later but waits for 2's retry.
  const auto run = RunChannel(c, KeyPackets({0, 0, 0, 20000}));
  EXPECT_EQ(run.deliveries[2].deliver_us, 50800);
  EXPECT_EQ(run.deliveries[3].deliver_us, 50801);
  for (std::size_t i = 1; i < run.deliveries.size(); ++i) {
    EXPECT_GT(run.deliveries[i].deliver_us, run.deliveries[i - 1].deliver_us);
  }
}

TEST(RunChannelTest, MatchesTickOracle) {
  std::mt19937_64 gen(2024);
  std::int64_t total_drops = 0;
  for (int i = 0; i < 40; ++i) {
    const auto s = oracle::RandomScenario(gen);
    const auto run = RunChannel(s.config, s.keys);
    const auto expected = oracle::TickChannel(s.config, s.keys);
    ASSERT_EQ(run.deliveries.size(), expected.deliver_us.size());
    for (std::size_t k = 0; k < s.keys.size(); ++k) {
      EXPECT_EQ(run.deliveries[k].deliver_us, expected.deliver_us[k])
          << "scenario " << i << " packet " << k;
    }
    EXPECT_EQ(run.stats.dropped_packets, expected.drops) << "scenario " << i;
    EXPECT_EQ(run.stats.offered_packets, expected.offered) << "scenario " << i;
    total_drops += expected.drops;
  }
  EXPECT_GT(total_drops, 0);
}

TEST(RunChannelTest, WorkConservingFifoAudit) {
  std::mt19937_64 gen(77);
  for (int i = 0; i < 30; ++i) {
    const auto s = oracle::RandomScenario(gen);
    const auto run = RunChannel(s.config, s.keys, true);
    std::map<std::pair<int, std::int64_t>, int> sizes;
    for (const auto& p : s.keys) sizes[{p.flow_id, p.seq}] = p.size_bytes;
    for (std::size_t f = 0; f < s.config.sources.size(); ++f) {
      for (const auto& p : GenerateCbr(s.config.sources[f], kForever / 2,
                                       static_cast<int>(f + 1))) {
        sizes[{p.flow_id, p.seq}] = p.size_bytes;
      }
    }
    std::map<std::pair<int, std::int64_t>, Micros> last_enqueue;
    Micros prev_depart = -1;
    int departures = 0;
    for (const auto& e : run.log) {
      const std::pair<int, std::int64_t> id{e.flow_id, e.seq};
      if (e.event == LogEvent::kEnqueue) last_enqueue[id] = e.time_us;
      if (e.event != LogEvent::kDepart) continue;
      // The link starts on a packet as soon as it is both present and free.
      const Micros start = std::max(prev_depart, last_enqueue.at(id));
      ASSERT_EQ(e.time_us, start + ServiceTimeUs(sizes.at(id), s.config))
          << "scenario " << i;
      prev_depart = e.time_us;
      ++departures;
    }
    std::int64_t enqueued = 0;
    for (const auto& e : run.log) enqueued += e.event == LogEvent::kEnqueue;
    EXPECT_EQ(departures, enqueued);
  }
}

TEST(RunChannelTest, ReliableInOrderDelivery) {
  std::mt19937_64 gen(13);
  for (int i = 0; i < 30; ++i) {
    const auto s = oracle::RandomScenario(gen);
    const auto run = RunChannel(s.config, s.keys, true);
    ASSERT_EQ(run.deliveries.size(), s.keys.size());
    std::vector<std::int64_t> delivered;
    for (const auto& e : run.log) {
      if (e.event == LogEvent::kDeliver) delivered.push_back(e.seq);
    }
    ASSERT_EQ(delivered.size(), s.keys.size());
    for (std::size_t k = 0; k < delivered.size(); ++k) {
      EXPECT_EQ(delivered[k], static_cast<std::int64_t>(k));
      EXPECT_EQ(run.deliveries[k].seq, static_cast<std::int64_t>(k));
      if (k > 0) {
        EXPECT_GT(run.deliveries[k].deliver_us,
                  run.deliveries[k - 1].deliver_us);
      }
      EXPECT_GE(run.deliveries[k].link_delay_us, 0);
    }
  }
}

TEST(RunChannelTest, Deterministic) {
  std::mt19937_64 gen(99);
  for (int i = 0; i < 5; ++i) {
    auto s = oracle::RandomScenario(gen);
    TrafficSourceSpec burst = Cbr(400, 900, 0, 300000);
    burst.kind = SourceKind::kOnOff;
    burst.on_ms = 20;
    burst.off_ms = 30;
    burst.phase_seed = 4;
    s.config.sources.push_back(burst);
    const auto a = RunChannel(s.config, s.keys, true);
    const auto b = RunChannel(s.config, s.keys, true);
    EXPECT_EQ(EventLogToCsv(a.log), EventLogToCsv(b.log));
    ASSERT_EQ(a.deliveries.size(), b.deliveries.size());
    for (std::size_t k = 0; k < a.deliveries.size(); ++k) {
      EXPECT_EQ(a.deliveries[k].deliver_us, b.deliveries[k].deliver_us);
    }
    EXPECT_EQ(a.stats.avg_delay_us, b.stats.avg_delay_us);
    EXPECT_EQ(a.stats.jitter_us, b.stats.jitter_us);
    EXPECT_EQ(a.stats.link_loss_pct, b.stats.link_loss_pct);
  }
}

TEST(RunChannelTest, EqualRateCbrBelowCapacityNeverDrops) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 40; ++i) {
    ChannelConfig c;
    c.queue_capacity_pkts = 2 + i % 5;
    c.tail_us = 20 * kMicrosPerSecond;
    const int size = 64 + static_cast<int>(gen() % 1400);
    const double per_stream_max = c.bottleneck_bps / (2.0 * size * 8);
    const double rate = per_stream_max * (0.3 + 0.69 * (gen() % 1000) / 1000.0);
    c.sources.push_back(Cbr(rate, size, static_cast<Micros>(gen() % 50000)));
    c.sources.push_back(Cbr(rate, size, static_cast<Micros>(gen() % 50000)));
    const auto run = RunChannel(c, {});
    EXPECT_EQ(run.stats.dropped_packets, 0) << "rate " << rate << " size " << size;
    EXPECT_LE(run.stats.max_queue_len, 2);
  }
}

TEST(GenerateCbrTest, Examples) {
  const auto p = GenerateCbr(Cbr(10, 100), kMicrosPerSecond);
  ASSERT_EQ(p.size(), 10u);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p[i].inject_us, static_cast<Micros>(i) * 100000);
    EXPECT_EQ(p[i].seq, static_cast<std::int64_t>(i));
    EXPECT_EQ(p[i].size_bytes, 100);
  }
  EXPECT_EQ(InterArrivalUs(110), 9091);
  const auto q = GenerateCbr(Cbr(110, 1024), kMicrosPerSecond);
  EXPECT_EQ(q[1].inject_us - q[0].inject_us, 9091);
  EXPECT_TRUE(GenerateCbr(Cbr(10, 100, 0, 0), kMicrosPerSecond).empty());
}

TEST(GenerateCbrTest, OfferedBitrate) {
  EXPECT_EQ(OfferedBitrate(Cbr(110, 1024)), 901120.0);
}

TEST(GenerateOnOffTest, ZeroOffEqualsCbr) {
  TrafficSourceSpec s = Cbr(250, 500, 1234);
  const auto cbr = GenerateCbr(s, 10 * kMicrosPerSecond);
  s.kind = SourceKind::kOnOff;
  s.on_ms = 20;
  s.off_ms = 0;
  s.phase_seed = 8;
  const auto onoff = GenerateOnOff(s, 10 * kMicrosPerSecond);
  ASSERT_EQ(onoff.size(), cbr.size());
  for (std::size_t i = 0; i < cbr.size(); ++i) {
    EXPECT_EQ(onoff[i].inject_us, cbr[i].inject_us);
    EXPECT_EQ(onoff[i].seq, cbr[i].seq);
  }
}

TEST(GenerateOnOffTest, DeterministicPerSeed) {
  TrafficSourceSpec s = Cbr(300, 500);
  s.kind = SourceKind::kOnOff;
  s.on_ms = 40;
  s.off_ms = 10;
  s.phase_seed = 3;
  const auto a = GenerateOnOff(s, 5 * kMicrosPerSecond);
  const auto b = GenerateOnOff(s, 5 * kMicrosPerSecond);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].inject_us, b[i].inject_us);
  }
  s.phase_seed = 4;
  const auto c = GenerateOnOff(s, 5 * kMicrosPerSecond);
  bool differ = c.size() != a.size();
  for (std::size_t i = 0; !differ && i < a.size(); ++i) {
    differ = a[i].inject_us != c[i].inject_us;
  }
  EXPECT_TRUE(differ);
}

TEST(GenerateOnOffTest, HalfDutyCycleHalvesRate) {
  TrafficSourceSpec s = Cbr(200, 500);
  s.kind = SourceKind::kOnOff;
  s.on_ms = 50;
  s.off_ms = 50;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    s.phase_seed = seed;
    const Micros horizon = 1000 * kMicrosPerSecond;
    const double rate = GenerateOnOff(s, horizon).size() / 1000.0;
    EXPECT_NEAR(rate, 100.0, 10.0) << "seed " << seed;
  }
}

TEST(ChannelStatsTest, JitterIsMeanAbsoluteStep) {
  std::vector<Delivery> d(3);
  d[0].link_delay_us = 1000;
  d[1].link_delay_us = 3000;
  d[2].link_delay_us = 2000;
  const auto s = ComputeChannelStats(d, LinkCounters{}, ChannelConfig{});
  EXPECT_DOUBLE_EQ(s.jitter_us, 1500.0);
  EXPECT_DOUBLE_EQ(s.avg_delay_us, 2000.0);
}

TEST(ChannelStatsTest, LossOverAllFlows) {
  LinkCounters counters;
  counters.flows.resize(2);
  counters.flows[0].offered_packets = 400;
  counters.flows[1].flow_id = 1;
  counters.flows[1].offered_packets = 600;
  counters.flows[1].dropped_packets = 36;
  const auto s = ComputeChannelStats({}, counters, ChannelConfig{});
  EXPECT_DOUBLE_EQ(s.link_loss_pct, 3.6);
}

TEST(EventLogTest, CsvHeaderAndRows) {
  const auto run = RunChannel(ChannelConfig{}, KeyPackets({0}), true);
  EXPECT_EQ(EventLogToCsv(run.log),
            "time_us,event,flow_id,seq,queue_len\n"
            "0,inject,0,0,0\n0,enqueue,0,0,0\n800,depart,0,0,0\n"
            "800,deliver,0,0,0\n");
}

}  // namespace
}  // namespace kcs

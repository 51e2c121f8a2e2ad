#include "kcs/replay.h"

namespace kcs {

std::vector<Packet> EventsToPackets(const KeystrokeTrace& trace,
                                    int event_size_bytes, Micros offset_us) {
  std::vector<Packet> packets;
  packets.reserve(trace.events.size());
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    packets.push_back({kKeystrokeFlow, static_cast<std::int64_t>(i),
                       event_size_bytes, trace.events[i].timestamp_us + offset_us,
                       i});
  }
  return packets;
}

KeystrokeTrace ReconstructTrace(std::span<const Delivery> deliveries,
                                const KeystrokeTrace& original) {
  if (deliveries.size() != original.events.size()) {
    throw Error("delivery count " + std::to_string(deliveries.size()) +
                " does not match event count " +
                std::to_string(original.events.size()));
  }
  KeystrokeTrace received = original;
  for (std::size_t i = 0; i < deliveries.size(); ++i) {
    if (deliveries[i].seq != static_cast<std::int64_t>(i)) {
      throw Error("deliveries out of sequence at index " + std::to_string(i));
    }
    received.events[i].timestamp_us = deliveries[i].deliver_us;
  }
  return received;
}

}  // namespace kcs

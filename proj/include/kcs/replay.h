#pragma once

#include <span>
#include <vector>

#include "kcs/netsim.h"
#include "kcs/trace.h"

namespace kcs {

constexpr int kDefaultEventSizeBytes = 100;

// One keystroke-flow packet per event, injected at the event time.
std::vector<Packet> EventsToPackets(const KeystrokeTrace& trace,
                                    int event_size_bytes = kDefaultEventSizeBytes,
                                    Micros offset_us = 0);

// The receiver's view of the trace: same events, stamped with their
// in-order delivery times. Throws Error on a count mismatch.
KeystrokeTrace ReconstructTrace(std::span<const Delivery> deliveries,
                                const KeystrokeTrace& original);

}  // namespace kcs

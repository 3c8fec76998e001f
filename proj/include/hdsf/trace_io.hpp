#pragma once

#include <iosfwd>
#include <string>

#include "hdsf/hybrid.hpp"

namespace hdsf {

/// JSON-lines layout: a header `{"dt", "signals", "modes"}`, one
/// `{"t", "mode", "signals": {...}}` object per sample, then one
/// `{"event": {"t", "guard", "from", "to"}}` record per event.
void write_trace_jsonl(std::ostream& out, const Trace& trace);
Trace read_trace_jsonl(std::istream& in);

void save_trace(const std::string& path, const Trace& trace);
Trace load_trace(const std::string& path);

} // namespace hdsf

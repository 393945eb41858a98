#include "v2x/common.hpp"

#include <atomic>
#include <iostream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace v2x {

namespace {
std::atomic<bool> g_warnings{true};
}

void EventLog::emit(std::string_view kind, const std::string& json_fields) {
  ++counts_[std::string(kind)];
  if (out_ == nullptr) return;
  *out_ << "{\"event\":\"" << kind << '"';
  if (!json_fields.empty()) *out_ << ',' << json_fields;
  *out_ << "}\n";
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

void set_warnings_enabled(bool enabled) { g_warnings = enabled; }

void warn(std::string_view message) {
  if (g_warnings) std::clog << "warning: " << message << '\n';
}

}  // namespace v2x

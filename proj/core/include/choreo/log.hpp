#pragma once

#include <deque>
#include <string>
#include <vector>

namespace choreo {

enum class PhaseLabel { A, B, C, D, Choreographer };

inline const char* phase_label_name(PhaseLabel p) {
  switch (p) {
    case PhaseLabel::A: return "a";
    case PhaseLabel::B: return "b";
    case PhaseLabel::C: return "c";
    case PhaseLabel::D: return "d";
    case PhaseLabel::Choreographer: return "choreographer";
  }
  return "?";
}

struct CurvePoint {
  long episode = 0;            // cumulative episode index within the run
  double window_success = 0.0; // trailing-window success rate
  PhaseLabel phase = PhaseLabel::A;
};

// Trailing success window (default 100 episodes). rate() averages over
// the episodes seen so far; full() gates early-stop decisions.
class SuccessWindow {
 public:
  explicit SuccessWindow(int size = 100) : size_(size) {}
  void push(bool success) {
    buf_.push_back(success);
    if (static_cast<int>(buf_.size()) > size_) buf_.pop_front();
  }
  double rate() const {
    if (buf_.empty()) return 0.0;
    long ok = 0;
    for (bool b : buf_)
      if (b) ++ok;
    return static_cast<double>(ok) / static_cast<double>(buf_.size());
  }
  bool full() const { return static_cast<int>(buf_.size()) == size_; }
  void reset() { buf_.clear(); }

 private:
  int size_;
  std::deque<bool> buf_;
};

struct TrainingLog {
  std::vector<CurvePoint> curve;
  bool completed = false;   // reached window success 1.0
  long episodes_used = 0;
};

}  // namespace choreo

#pragma once

namespace m2n2 {

struct PromptPoint {
  int x = 0;
  int y = 0;
  int label = 1;  // 1 foreground, 0 background
  friend bool operator==(const PromptPoint&, const PromptPoint&) = default;
};

}  // namespace m2n2

// Shows one edit in every format and checks that each parses back.

#include <iostream>

#include "progassist/edit_formats.hpp"

int main() {
  using namespace progassist;
  const TextDocument before(
      "def mean(xs):\n"
      "    total = 0\n"
      "    for x in xs:\n"
      "        total += x\n"
      "    return total / len(xs)\n");
  const TextDocument after(
      "def mean(xs):\n"
      "    if not xs:\n"
      "        return 0.0\n"
      "    total = 0\n"
      "    for x in xs:\n"
      "        total += x\n"
      "    return total / len(xs)\n");

  for (EditFormat f : kAllEditFormats) {
    const RenderedEdit edit = render_edit(before, after, f);
    const bool ok = apply_rendered(edit, before) == after;
    std::cout << "== " << format_name(f) << (ok ? "" : " (round trip FAILED)") << '\n' << edit.payload << '\n';
    if (!ok) return 1;
  }
  return 0;
}

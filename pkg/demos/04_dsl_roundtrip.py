"""The workspace text language: parsing, diagnostics, canonical printing."""

import _path  # noqa: F401

from mfgsim import parse, print_workspace

source = """
// a tiny workspace
sortset shop {
  sort Machine;
  sort Lathe < Machine;
  sort Duration;
}

model cell in shop {
  entity Lathe1 : Lathe kind object {
    attr cycle_time : Duration = 45 s;
    rule cycle_time <= 120;
  }
}
"""

result = parse(source, "cell.mim")
print("parsed ok:", result.ok)
canonical = print_workspace(result.workspace)
print("canonical form:")
print(canonical)

again = parse(canonical, "cell.mim")
print("round-trip equal:", again.workspace == result.workspace)
print("canonical fixed point:", print_workspace(again.workspace) == canonical)

broken = source.replace("}", "", 1)
bad = parse(broken, "cell.mim")
print()
print("broken input diagnostics:")
for d in bad.diagnostics:
    print(" ", d.render())

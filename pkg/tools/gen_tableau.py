"""Write the DOP853 tableau used by the integrators.

Source of the numbers: scipy's DOP853 coefficient tables (Hairer's values).
Regenerate with ``python3 tools/gen_tableau.py`` from the repository root.
"""
from pathlib import Path

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as d

OUT = Path(__file__).resolve().parents[1] / "src" / "hopflink"
NS = d.N_STAGES          # 12 stages of the main step
NX = d.N_STAGES_EXTENDED  # 16 with the dense-output stages


def _py(name, a):
    return f"{name} = np.array({np.asarray(a).tolist()!r})\n"


def _c1(name, a):
    vals = ", ".join(repr(float(v)) for v in a)
    return f"static const double {name}[{len(a)}] = {{{vals}}};\n"


def _c2(name, a):
    rows = ",\n    ".join("{" + ", ".join(repr(float(v)) for v in r) + "}" for r in a)
    return f"static const double {name}[{a.shape[0]}][{a.shape[1]}] = {{\n    {rows}\n}};\n"


def main():
    A = np.asarray(d.A, float)
    py = ['"""DOP853 tableau (generated by tools/gen_tableau.py; do not edit)."""\n',
          "import numpy as np\n\n",
          f"N_STAGES = {NS}\nN_STAGES_EXTENDED = {NX}\nINTERPOLATOR_POWER = {d.INTERPOLATOR_POWER}\n",
          _py("A", A), _py("B", d.B), _py("E3", d.E3), _py("E5", d.E5), _py("D", d.D)]
    (OUT / "_dop853.py").write_text("".join(py))
    h = ["/* DOP853 tableau (generated by tools/gen_tableau.py; do not edit). */\n",
         "#ifndef HOPFLINK_DOP853_TAB_H\n#define HOPFLINK_DOP853_TAB_H\n",
         f"#define DOP_NS {NS}\n#define DOP_NX {NX}\n",
         _c2("dop_A", A), _c1("dop_B", d.B), _c1("dop_E3", d.E3), _c1("dop_E5", d.E5),
         _c2("dop_D", np.asarray(d.D, float)), "#endif\n"]
    (OUT / "_dop853_tab.h").write_text("".join(h))


if __name__ == "__main__":
    main()

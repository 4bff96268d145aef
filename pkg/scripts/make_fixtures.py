"""Regenerate the JSON fixtures shipped with the package from the catalog."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

from tiotest import catalog
from tiotest.formats import document, save

OUT = Path(__file__).resolve().parent.parent / "src" / "tiotest" / "fixtures"

MODELS = {
    "running_spec": catalog.running_spec,
    "running_tp": catalog.running_tp,
    "running_spec_c": catalog.running_spec_with_c,
    "running_tp_c": catalog.running_tp_with_c,
    "impl_lower": catalog.running_impl_lower,
    "impl_c_mutant": catalog.running_impl_c_mutant,
    "impl_silent": catalog.running_impl_silent,
    "imps_spec": catalog.imps_spec,
    "imp1": catalog.imp1,
    "imp2": catalog.imp2,
    "ex_ta": catalog.ex_ta,
}


def main() -> None:
    OUT.mkdir(exist_ok=True)
    for name, make in MODELS.items():
        save(document(make()), OUT / f"{name}.json")
    for spec, tp, out in [("running_spec", "running_tp", "golden_tc"), ("running_spec_c", "running_tp_c", "golden_tc_c")]:
        subprocess.run(
            [
                sys.executable, "-m", "tiotest.cli", "testgen",
                "--spec", str(OUT / f"{spec}.json"), "--tp", str(OUT / f"{tp}.json"),
                "--clocks", "1", "--max-const", "2", "-o", str(OUT / f"{out}.json"),
            ],
            check=True,
            stdout=subprocess.DEVNULL,
        )


if __name__ == "__main__":
    main()

"""Regenerate the bundled FCIDUMP fixtures and their reference energies.

Requires pyscf, which is not a runtime dependency of the package.
"""

import json
from pathlib import Path

from pyscf import fci, gto, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "dmrgqct" / "data"

MOLECULES = {
    "h2_sto3g": "H 0 0 0; H 0 0 0.7414",
    "h4_sto3g": "H 0 0 0; H 0 0 1.5; H 0 0 3.0; H 0 0 4.5",
}


def main():
    refs = {}
    for name, atom in MOLECULES.items():
        mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom", verbose=0)
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-12
        mf.kernel()
        e_fci = fci.FCI(mf).kernel()[0]
        fcidump.from_scf(mf, str(OUT / f"{name}.fcidump"), tol=1e-14)
        refs[name] = {
            "geometry_angstrom": atom,
            "basis": "sto-3g",
            "n_orbitals": int(mol.nao),
            "n_electrons": int(mol.nelectron),
            "hf_energy": float(mf.e_tot),
            "fci_energy": float(e_fci),
        }
    (OUT / "references.json").write_text(json.dumps(refs, indent=2) + "\n")
    print(json.dumps(refs, indent=2))


if __name__ == "__main__":
    main()

# Copyright 2026 The qattn Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds a small QM9-style property corpus with RDKit.

Random C/N/O/F graphs with at most nine heavy atoms are grown, sanitized and
canonicalized; only molecules whose canonical SMILES tokenizes over the fixed
30-token chemical vocabulary are kept. Properties use the column conventions
of the C++ ingest path:

  HBA    count of N and O atoms
  HBD    count of N and O atoms carrying at least one hydrogen
  nRot   non-ring single bonds between two non-terminal heavy atoms
  nRing  smallest-set ring count (cyclomatic number)
  Stereo unassigned-inclusive stereocenter count

Usage: python3 make_corpus.py OUT.csv [N] [SEED]
"""
import csv
import random
import re
import sys

from rdkit import Chem, RDLogger
from rdkit.Chem import Crippen, Descriptors
from rdkit.Chem import rdMolDescriptors as rd

RDLogger.DisableLog("rdApp.*")

TOKENS = [
    "#", "(", ")", "-", "1", "2", "3", "4", "5", "=",
    "C", "F", "N", "O", "[C-]", "[CH-]", "[N+]", "[N-]", "[NH+]", "[NH2+]",
    "[NH3+]", "[O-]", "[c-]", "[cH-]", "[n-]", "[nH+]", "[nH]", "c", "n", "o",
]
TOKEN_RE = re.compile("|".join(re.escape(t) for t in sorted(TOKENS, key=len, reverse=True)))

VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1}
ELEMENTS = ["C"] * 70 + ["N"] * 13 + ["O"] * 14 + ["F"] * 3

# Charged motifs that the random grower never produces.
SEEDS = [
    "C[N+](=O)[O-]", "O=[N+]([O-])c1ccoc1", "[NH3+]CC(=O)[O-]", "[C-]#[N+]C",
    "C[NH2+]CC(=O)[O-]", "[O-]C(=O)C[NH+]1CC1", "[NH3+]C1CC1C(=O)[O-]",
    "CC[N+](=O)[O-]", "O=[N+]([O-])C1CC1", "[C-]#[N+]CC=O", "C[NH+]1CCC1C(=O)[O-]",
    "[NH3+]CC#CC(=O)[O-]", "Cc1cc[nH]c1", "c1cn[nH]c1", "Cc1ncc[nH]1",
    "[NH3+]C(C)C(=O)[O-]", "OC[NH2+]CC([O-])=O", "C[n+]1ccccc1",
]


def tokenize_ok(smiles):
    pos = 0
    for m in TOKEN_RE.finditer(smiles):
        if m.start() != pos:
            return False
        pos = m.end()
    return pos == len(smiles)


# Aromatic cores; substituents are grown onto their hydrogen-bearing atoms.
SCAFFOLDS = [
    "c1ccccc1", "c1ccncc1", "c1ccoc1", "c1cc[nH]c1", "c1cnc[nH]1", "c1cocn1",
    "c1cncnc1", "c1cn[nH]c1", "c1cnoc1", "c1nnc[nH]1", "c1ncncn1", "c1cnccn1",
]


def grow(rng):
    n = rng.choice([3, 4, 5, 6, 6, 7, 7, 7, 8, 8, 8, 8, 9, 9, 9, 9, 9, 9])
    if rng.random() < 0.3:
        core = Chem.MolFromSmiles(rng.choice(SCAFFOLDS))
        Chem.Kekulize(core, clearAromaticFlags=True)
        free = [a.GetTotalNumHs() for a in core.GetAtoms()]
        mol = Chem.RWMol(core)
        for a in mol.GetAtoms():
            a.SetNoImplicit(False)
            a.SetNumExplicitHs(0)
    else:
        mol = Chem.RWMol()
        free = []
    start = mol.GetNumAtoms()
    for i in range(start, max(n, start)):
        el = rng.choice(ELEMENTS)
        if i > 0:
            cands = [a for a in range(i) if free[a] > 0]
            if not cands:
                break
            parent = rng.choice(cands)
            if el == "F" and free[parent] < 1:
                el = "C"
        idx = mol.AddAtom(Chem.Atom(el))
        free.append(VALENCE[el])
        if i == 0:
            continue
        limit = min(free[parent], free[idx])
        order = 1
        r = rng.random()
        if limit >= 3 and r < 0.06:
            order = 3
        elif limit >= 2 and r < 0.22:
            order = 2
        mol.AddBond(parent, idx, {1: Chem.BondType.SINGLE, 2: Chem.BondType.DOUBLE,
                                  3: Chem.BondType.TRIPLE}[order])
        free[parent] -= order
        free[idx] -= order
    for _ in range(rng.choice([0, 0, 1, 1, 1, 2])):
        open_atoms = [a for a in range(mol.GetNumAtoms()) if free[a] > 0]
        if len(open_atoms) < 2:
            break
        a, b = rng.sample(open_atoms, 2)
        if mol.GetBondBetweenAtoms(a, b) is not None:
            continue
        path = Chem.GetShortestPath(mol, a, b)
        if len(path) < 3 or len(path) > 7:
            continue
        mol.AddBond(a, b, Chem.BondType.SINGLE)
        free[a] -= 1
        free[b] -= 1
    return mol.GetMol()


def properties(mol):
    hba = sum(1 for a in mol.GetAtoms() if a.GetSymbol() in ("N", "O"))
    hbd = sum(1 for a in mol.GetAtoms()
              if a.GetSymbol() in ("N", "O") and a.GetTotalNumHs() > 0)
    nrot = rd.CalcNumRotatableBonds(mol, rd.NumRotatableBondsOptions.NonStrict)
    stereo = len(Chem.FindMolChiralCenters(mol, includeUnassigned=True,
                                           useLegacyImplementation=False))
    return [
        round(Descriptors.MolWt(mol), 3), hba, hbd, nrot, len(Chem.GetSSSR(mol)),
        rd.CalcNumHeteroatoms(mol), round(rd.CalcTPSA(mol), 2),
        round(Crippen.MolLogP(mol), 4), stereo,
    ]


def main():
    out = sys.argv[1]
    target = int(sys.argv[2]) if len(sys.argv) > 2 else 3000
    rng = random.Random(int(sys.argv[3]) if len(sys.argv) > 3 else 7)
    seen = set()
    rows = []

    def consider(mol):
        if mol is None:
            return
        try:
            Chem.SanitizeMol(mol)
        except Exception:  # noqa: BLE001 - RDKit raises several types
            return
        if mol.GetNumHeavyAtoms() > 9 or len(Chem.GetMolFrags(mol)) != 1:
            return
        smi = Chem.MolToSmiles(mol)
        if smi in seen or not tokenize_ok(smi):
            return
        seen.add(smi)
        rows.append([smi] + properties(Chem.MolFromSmiles(smi)))

    for s in SEEDS:
        consider(Chem.MolFromSmiles(s))
    while len(rows) < target:
        consider(grow(rng))
    rng.shuffle(rows)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["SMILES", "MW", "HBA", "HBD", "nRot", "nRing", "nHet", "TPSA",
                    "logP", "Stereo"])
        w.writerows(rows)


if __name__ == "__main__":
    main()

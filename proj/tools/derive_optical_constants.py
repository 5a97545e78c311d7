#!/usr/bin/env python3
"""Derive x-ray optical constants and nuclear scales for the cavity data tables.

Writes the material/species block used by data/materials_14p413keV.cav.
delta/beta come from xraylib (Henke/Elam-based) and are cross-checked against
the periodictable package (independent f1/f2 tabulation); the script aborts if
the two disagree by more than 5% in delta or 10% in beta.

Nuclear scale (Gamma0 per nm^2 of resonant layer) for an unsplit line:

    scale = pi * rho57 * g * f_LM / (k0 * (1 + alpha))

with rho57 the resonant-isotope number density (1/nm^3), g = (2Ie+1)/(2Ig+1),
f_LM the Lamb-Moessbauer factor and k0 = 2 pi E / (hc) in 1/nm.
"""
import math
import sys

import xraylib
from periodictable import xsf

ENERGY_KEV = 14.413
HC_KEV_NM = 1.23984198
K0 = 2.0 * math.pi * ENERGY_KEV / HC_KEV_NM
AVOGADRO = 6.02214076e23

# name, formula, density g/cm^3
MATERIALS = [
    ("Pt", "Pt", 21.45),
    ("Pd", "Pd", 12.02),
    ("C", "C", 2.26),  # graphite bulk density
    ("B4C", "B4C", 2.52),
    ("Fe", "Fe", 7.874),
    ("SS", "Fe55Cr25Ni20", 7.9),  # stainless steel, atomic composition
    ("Si", "Si", 2.33),
]

# 57Fe M1 transition
GAMMA0_NEV = 4.66
ALPHA = 8.6
SPIN_FACTOR = 4.0 / 2.0  # (2*3/2+1)/(2*1/2+1)
F_LM = 0.8
ENRICHMENT = 0.95


def optical(formula, density):
    delta = 1.0 - xraylib.Refractive_Index_Re(formula, ENERGY_KEV, density)
    beta = xraylib.Refractive_Index_Im(formula, ENERGY_KEV, density)
    n = xsf.index_of_refraction(formula, density=density, energy=ENERGY_KEV)
    d2, b2 = 1.0 - n.real, -n.imag
    if abs(delta - d2) > 0.05 * delta or abs(beta - b2) > 0.10 * beta + 1e-9:
        sys.exit(f"tabulations disagree for {formula}: {delta} {d2} {beta} {b2}")
    return delta, beta


def nuclear_scale(fe_atoms_per_nm3):
    rho57 = fe_atoms_per_nm3 * ENRICHMENT
    return math.pi * rho57 * SPIN_FACTOR * F_LM / (K0 * (1.0 + ALPHA))


def main():
    print(f"energy_keV = {ENERGY_KEV}")
    for name, formula, density in MATERIALS:
        d, b = optical(formula, density)
        print(f"# {formula} rho={density} g/cm3")
        print(f"material {name} delta={d:.6e} beta={b:.6e}")
    fe = 7.874 / 55.845 * AVOGADRO * 1e-21
    ss_mass = 0.55 * 55.845 + 0.25 * 51.996 + 0.20 * 58.693
    ss = 0.55 * 7.9 / ss_mass * AVOGADRO * 1e-21
    print(f"# k0 = {K0:.6f} 1/nm, f_LM = {F_LM}, enrichment = {ENRICHMENT}")
    print(f"# scale(57Fe metal) = {nuclear_scale(fe):.6f} Gamma0/nm^2")
    print(f"# scale(57SS)       = {nuclear_scale(ss):.6f} Gamma0/nm^2")
    print(f"species Fe57 E0_keV={ENERGY_KEV} gamma0_neV={GAMMA0_NEV} alpha={ALPHA} lines=[(0,1)]")


if __name__ == "__main__":
    main()

"""Declarative problem files (YAML).

Example (Poisson equation with a source in a subdomain)::

    filename_domain: demo_domain.igad
    regions:
      Omega: all
      Omega_0: vertices in (x > 1.5) & (y < 1.5)
      Gamma1: [vertices of set xi10, facet]
      Gamma2: [vertices of set xi11, facet]
    fields:
      temperature: [real, 1, Omega, null, H1, iga]
    variables:
      T: [unknown field, temperature, 0]
      s: [test field, temperature, T]
    ebcs:
      T1: [Gamma1, {T.0: 0.5}]
      T2: [Gamma2, {T.0: -0.5}]
    materials:
      m: {f: -2.0}
    integrals:
      i: 3
    equations:
      Temperature: dw_laplace.i.Omega(s, T) = dw_volume_lvf.i.Omega_0(m.f, s)
    solvers:
      ls: [ls.scipy_direct, {}]
      newton: [nls.newton, {i_max: 1, eps_a: 1.0e-10}]

A FEM problem replaces ``filename_domain`` by ``filename_mesh`` (a domain
file the mesh is sampled from) plus ``divisions``, and uses the field family
``lagrange`` or ``lobatto`` with an integer order.
"""
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..assembly import TERMS
from ..regions import KINDS, SelectorSyntaxError, parse_selector
from ..solve import SolverConfig
from .expressions import ExpressionSyntaxError, compile_expression

SECTIONS = ("filename_domain", "filename_mesh", "divisions", "regions", "fields", "variables",
            "ebcs", "materials", "integrals", "equations", "solvers")
FIELD_FAMILIES = ("iga", "lagrange", "lobatto")
LINEAR_SOLVERS = {"ls.scipy_direct": "direct", "ls.cg": "cg"}

# Argument roles per term: "m" material parameter, "v" test, "u" unknown.
TERM_SIGNATURES = {
    "dw_laplace": ("v", "u"),
    "dw_volume_lvf": ("m", "v"),
    "dw_lin_elastic": ("m", "m", "v", "u"),
}


class ProblemFileError(ValueError):
    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class FieldSpec:
    name: str
    n_components: int
    region: str
    order: object  # int or None for IGA
    family: str


@dataclass(frozen=True)
class VariableSpec:
    name: str
    kind: str  # "unknown" or "test"
    field: str
    link: object  # history index for unknowns, unknown name for tests


@dataclass(frozen=True)
class EbcSpec:
    name: str
    region: str
    variable: str
    component: object  # int or "all"
    value: object  # float or Expression


@dataclass(frozen=True)
class TermSpec:
    name: str
    integral: str
    region: str
    args: tuple
    sign: float = 1.0

    def __str__(self):
        return f"{self.name}.{self.integral}.{self.region}({', '.join(self.args)})"


@dataclass(frozen=True)
class EquationSpec:
    name: str
    lhs: tuple
    rhs: tuple

    @property
    def terms(self):
        return self.lhs + self.rhs


@dataclass
class ProblemSpec:
    base_dir: Path
    filename_domain: str = None
    filename_mesh: str = None
    divisions: tuple = None
    regions: dict = field(default_factory=dict)  # name -> (selector text, kind)
    fields: dict = field(default_factory=dict)
    variables: dict = field(default_factory=dict)
    ebcs: dict = field(default_factory=dict)
    materials: dict = field(default_factory=dict)
    integrals: dict = field(default_factory=dict)
    equations: dict = field(default_factory=dict)
    solver: SolverConfig = SolverConfig()

    @property
    def is_iga(self):
        return self.filename_domain is not None

    @property
    def geometry_path(self):
        return self.base_dir / (self.filename_domain or self.filename_mesh)

    @property
    def unknown(self):
        return next(v for v in self.variables.values() if v.kind == "unknown")


# --- sections ------------------------------------------------------------------------

def _mapping(doc, key, required=True):
    if key not in doc:
        if required:
            raise ProblemFileError("missing section", key)
        return {}
    val = doc[key]
    if not isinstance(val, dict):
        raise ProblemFileError("expected a mapping", key)
    return val


def _parse_regions(doc):
    out = {}
    for name, value in _mapping(doc, "regions").items():
        key = f"regions.{name}"
        if isinstance(value, str):
            text, kind = value, "cell"
        elif isinstance(value, list) and len(value) == 2 and all(isinstance(v, str) for v in value):
            text, kind = value
        else:
            raise ProblemFileError("expected a selector string or [selector, kind]", key)
        if kind not in KINDS:
            raise ProblemFileError(f"unknown region kind {kind!r}; use one of {KINDS}", key)
        try:
            parse_selector(text)
        except SelectorSyntaxError as exc:
            raise ProblemFileError(f"bad selector {text!r}: {exc}", key) from exc
        out[str(name)] = (text, kind)
    return out


def _parse_fields(doc, regions):
    out = {}
    for name, value in _mapping(doc, "fields").items():
        key = f"fields.{name}"
        if not isinstance(value, list) or len(value) not in (5, 6):
            raise ProblemFileError("expected [real, components, region, order, (H1,) family]", key)
        if value[0] != "real":
            raise ProblemFileError(f"only real fields are supported, got {value[0]!r}", key)
        n_comp, region, order, family = value[1], value[2], value[3], value[-1]
        if isinstance(n_comp, bool) or not isinstance(n_comp, int) or not 1 <= n_comp <= 3:
            raise ProblemFileError(f"components must be 1..3, got {n_comp!r}", key)
        if region not in regions:
            raise ProblemFileError(f"unknown region {region!r}", key)
        if len(value) == 6 and value[4] != "H1":
            raise ProblemFileError(f"only H1 fields are supported, got {value[4]!r}", key)
        if family not in FIELD_FAMILIES:
            raise ProblemFileError(f"unknown family {family!r}; use one of {FIELD_FAMILIES}", key)
        if family == "iga" and order is not None:
            raise ProblemFileError("IGA fields take their order from the domain; use null", key)
        if family != "iga" and (isinstance(order, bool) or not isinstance(order, int)):
            raise ProblemFileError(f"FE fields need an integer order, got {order!r}", key)
        out[str(name)] = FieldSpec(str(name), n_comp, region, order, family)
    return out


def _parse_variables(doc, fields):
    out = {}
    for name, value in _mapping(doc, "variables").items():
        key = f"variables.{name}"
        if not isinstance(value, list) or len(value) != 3:
            raise ProblemFileError("expected [unknown|test field, field name, link]", key)
        kind_text, fld, link = value
        kind = {"unknown field": "unknown", "test field": "test"}.get(kind_text)
        if kind is None:
            raise ProblemFileError(f"unknown variable kind {kind_text!r}", key)
        if fld not in fields:
            raise ProblemFileError(f"unknown field {fld!r}", key)
        out[str(name)] = VariableSpec(str(name), kind, fld, link)
    unknowns = [v for v in out.values() if v.kind == "unknown"]
    tests = [v for v in out.values() if v.kind == "test"]
    if len(unknowns) != 1 or len(tests) != 1:
        raise ProblemFileError("exactly one unknown and one test variable are supported",
                               "variables")
    if tests[0].link != unknowns[0].name:
        raise ProblemFileError(f"test variable must refer to {unknowns[0].name!r}",
                               f"variables.{tests[0].name}")
    if tests[0].field != unknowns[0].field:
        raise ProblemFileError("test and unknown variables must share a field",
                               f"variables.{tests[0].name}")
    return out


def _ebc_value(value, key):
    if isinstance(value, bool):
        raise ProblemFileError(f"bad value {value!r}", key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
        try:
            return compile_expression(value)
        except ExpressionSyntaxError as exc:
            raise ProblemFileError(f"bad expression {value!r}: {exc}", key) from exc
    raise ProblemFileError(f"expected a number or an expression, got {value!r}", key)


def _parse_ebcs(doc, regions, variables, fields):
    out = {}
    for name, value in _mapping(doc, "ebcs", required=False).items():
        key = f"ebcs.{name}"
        if (not isinstance(value, list) or len(value) != 2 or not isinstance(value[1], dict)
                or not value[1]):
            raise ProblemFileError("expected [region, {var.component: value}]", key)
        region, items = value
        if region not in regions:
            raise ProblemFileError(f"unknown region {region!r}", key)
        for dof_key, val in items.items():
            m = re.fullmatch(r"(\w+)\.(all|\d+)", str(dof_key))
            if m is None:
                raise ProblemFileError(f"bad DOF key {dof_key!r}; use var.component or var.all",
                                       key)
            var, comp = m.groups()
            if var not in variables or variables[var].kind != "unknown":
                raise ProblemFileError(f"{var!r} is not an unknown variable", key)
            n_comp = fields[variables[var].field].n_components
            if comp != "all":
                comp = int(comp)
                if comp >= n_comp:
                    raise ProblemFileError(f"component {comp} out of range ({n_comp} components)",
                                           key)
            sub = name if len(items) == 1 else f"{name}[{dof_key}]"
            out[sub] = EbcSpec(sub, region, var, comp, _ebc_value(val, f"{key}.{dof_key}"))
    return out


def _parse_materials(doc):
    out = {}
    for name, value in _mapping(doc, "materials", required=False).items():
        key = f"materials.{name}"
        if isinstance(value, list) and len(value) == 1:
            value = value[0]
        if not isinstance(value, dict):
            raise ProblemFileError("expected a mapping of parameter values", key)
        params = {}
        for pname, pval in value.items():
            if isinstance(pval, bool) or not isinstance(pval, (int, float)):
                raise ProblemFileError(f"parameter {pname!r} must be a number", key)
            params[str(pname)] = float(pval)
        out[str(name)] = params
    return out


def _parse_integrals(doc):
    out = {}
    for name, value in _mapping(doc, "integrals").items():
        if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= 10:
            raise ProblemFileError(f"order must be an integer 1..10, got {value!r}",
                                   f"integrals.{name}")
        out[str(name)] = value
    return out


_TERM_RE = re.compile(r"\s*([+-]?)\s*(\w+)\.(\w+)\.(\w+)\(([^()]*)\)\s*")


def parse_term_side(text, key):
    terms = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if m is None or (terms and not m.group(1)):
            raise ProblemFileError(f"cannot parse term at {text[pos:]!r}", key)
        sign, name, integral, region, args = m.groups()
        args = tuple(a.strip() for a in args.split(",") if a.strip())
        terms.append(TermSpec(name, integral, region, args, -1.0 if sign == "-" else 1.0))
        pos = m.end()
    if not terms:
        raise ProblemFileError("empty side of an equation", key)
    return tuple(terms)


def _check_term(term, spec, key):
    if term.name not in TERMS:
        raise ProblemFileError(f"unknown term {term.name!r}; supported terms: "
                               f"{', '.join(TERMS)}", key)
    if term.integral not in spec.integrals:
        raise ProblemFileError(f"unknown integral {term.integral!r} in {term}", key)
    if term.region not in spec.regions:
        raise ProblemFileError(f"unknown region {term.region!r} in {term}", key)
    sig = TERM_SIGNATURES[term.name]
    if len(term.args) != len(sig):
        raise ProblemFileError(f"{term.name} takes {len(sig)} arguments, got {len(term.args)}",
                               key)
    for role, arg in zip(sig, term.args):
        if role == "m":
            mat, _, par = arg.partition(".")
            if mat not in spec.materials or par not in spec.materials[mat]:
                raise ProblemFileError(f"unknown material parameter {arg!r} in {term}", key)
        else:
            var = spec.variables.get(arg)
            want = "test" if role == "v" else "unknown"
            if var is None or var.kind != want:
                raise ProblemFileError(f"argument {arg!r} of {term} must be the {want} "
                                       "variable", key)


def _parse_equations(doc, spec):
    out = {}
    eqs = _mapping(doc, "equations")
    if len(eqs) != 1:
        raise ProblemFileError(f"exactly one equation is supported, got {len(eqs)}",
                               "equations")
    for name, text in eqs.items():
        key = f"equations.{name}"
        if not isinstance(text, str) or text.count("=") != 1:
            raise ProblemFileError("expected 'lhs = rhs'", key)
        lhs_text, rhs_text = text.split("=")
        lhs = parse_term_side(lhs_text, key)
        rhs = () if rhs_text.strip() == "0" else parse_term_side(rhs_text, key)
        for t in lhs + rhs:
            _check_term(t, spec, key)
        out[str(name)] = EquationSpec(str(name), lhs, rhs)
    return out


def _parse_solvers(doc):
    opts = {}
    method = "direct"
    for name, value in _mapping(doc, "solvers", required=False).items():
        key = f"solvers.{name}"
        if not isinstance(value, list) or not 1 <= len(value) <= 2:
            raise ProblemFileError("expected [kind, {options}]", key)
        kind = value[0]
        options = value[1] if len(value) == 2 else {}
        if not isinstance(options, dict):
            raise ProblemFileError("options must be a mapping", key)
        if kind in LINEAR_SOLVERS:
            method = LINEAR_SOLVERS[kind]
            allowed = {"cg_rtol", "cg_maxiter"}
        elif kind == "nls.newton":
            allowed = {"i_max", "eps_a"}
        else:
            raise ProblemFileError(f"unknown solver {kind!r}; use one of "
                                   f"{sorted(LINEAR_SOLVERS) + ['nls.newton']}", key)
        for k, v in options.items():
            if k not in allowed:
                raise ProblemFileError(f"unknown option {k!r} for {kind}", key)
            try:
                # YAML 1.1 reads "1e-10" as a string.
                opts[k] = int(v) if k in ("i_max", "cg_maxiter") else float(v)
            except (TypeError, ValueError):
                raise ProblemFileError(f"option {k!r} must be a number, got {v!r}", key) from None
    try:
        return SolverConfig(method=method, **opts)
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(str(exc), "solvers") from exc


def parse_problem(doc, base_dir=".") -> ProblemSpec:
    if not isinstance(doc, dict):
        raise ProblemFileError("problem document must be a mapping")
    for key in doc:
        if key not in SECTIONS:
            raise ProblemFileError(f"unknown section; expected one of {SECTIONS}", key)
    spec = ProblemSpec(Path(base_dir))
    has_domain = "filename_domain" in doc
    has_mesh = "filename_mesh" in doc
    if has_domain == has_mesh:
        raise ProblemFileError("give exactly one of filename_domain or filename_mesh")
    if has_domain:
        spec.filename_domain = str(doc["filename_domain"])
        if "divisions" in doc:
            raise ProblemFileError("only meaningful with filename_mesh", "divisions")
    else:
        spec.filename_mesh = str(doc["filename_mesh"])
        div = doc.get("divisions")
        if (not isinstance(div, list) or not div
                or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in div)):
            raise ProblemFileError("expected a list of positive integers", "divisions")
        spec.divisions = tuple(div)
    spec.regions = _parse_regions(doc)
    spec.fields = _parse_fields(doc, spec.regions)
    if len(spec.fields) != 1:
        raise ProblemFileError("exactly one field is supported", "fields")
    fld = next(iter(spec.fields.values()))
    if has_domain != (fld.family == "iga"):
        raise ProblemFileError("iga fields need filename_domain, FE fields need filename_mesh",
                               f"fields.{fld.name}")
    spec.variables = _parse_variables(doc, spec.fields)
    spec.ebcs = _parse_ebcs(doc, spec.regions, spec.variables, spec.fields)
    spec.materials = _parse_materials(doc)
    spec.integrals = _parse_integrals(doc)
    spec.equations = _parse_equations(doc, spec)
    spec.solver = _parse_solvers(doc)
    return spec


def read_problem_file(path) -> ProblemSpec:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"problem file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ProblemFileError(f"{path}: not valid YAML: {exc}") from exc
    return parse_problem(doc, path.parent)

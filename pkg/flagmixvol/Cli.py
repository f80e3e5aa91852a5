# Command-line interface: constant tables, mixed-volume runs and the d=4 verification suite.
#
# Part of flagmixvol

import io
import os
import csv
import sys
import json
import math
import logging
import argparse
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .Ball import Ball
from .Check import Check
from .Constants import Constants
from .FlagMeasure import Body, FlagMeasure
from .Grassmann import MCConfig, Grassmann, NonFiniteSampleError
from .MixedVolume import MixedVolume, MixedVolumeRequest, Mode, PreconditionError
from .Oracle import Oracle
from .PhiTable import PhiTable
from .Polytope import Polytope

log = logging.getLogger(__name__)

REPORT_VERSION = 1
CACHE_ENV = 'FLAGMIXVOL_CACHE_DIR'
DEFAULT_CACHE_DIR = os.path.join('~', '.cache', 'flagmixvol')
FORMATS = ('json', 'csv', 'text')

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

ORACLE_REL = 0.02
DIVERGENCE_GRID = (1e-1, 1e-2, 1e-3, 1e-4)
ROTATE_K_STREAM = 11
ROTATE_L_STREAM = 12


class RunConfig:
    def __init__(self, command: str, params: Dict[str, Any], mc: MCConfig, *,
                 cache_dir: Optional[str] = None, output: Optional[str] = None, fmt: str = 'text') -> None:
        if fmt not in FORMATS:
            raise ValueError(f'invalid output format ({fmt})')
        self.command: str = command
        self.params: Dict[str, Any] = params
        self.mc: MCConfig = mc
        self.cache_dir: Optional[str] = cache_dir
        self.output: Optional[str] = output
        self.fmt: str = fmt

    @staticmethod
    def from_args(args: argparse.Namespace):
        skip = {'command', 'func', 'samples', 'seed', 'threads', 'batches', 'cache_dir', 'no_cache',
                'output', 'format', 'config', 'verbose'}
        params = {key: value for key, value in sorted(vars(args).items()) if key not in skip}
        mc = MCConfig(sample_count=args.samples, seed=args.seed, threads=args.threads, batch_count=args.batches)
        return RunConfig(args.command, params, mc, cache_dir=cache_dir_of(args), output=args.output,
                         fmt=args.format)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'params': self.params,
            'mc': self.mc.to_dict(),
            'cache_dir': self.cache_dir,
            'output': self.output,
            'format': self.fmt,
        }


def cache_dir_of(args: argparse.Namespace) -> Optional[str]:
    if args.no_cache:
        return None
    return os.path.expanduser(args.cache_dir or os.environ.get(CACHE_ENV) or DEFAULT_CACHE_DIR)


class LoadedBody:
    """Body read from the command line, with zonotope generators when known"""

    def __init__(self, name: str, body: Body, generators: Optional[np.ndarray] = None) -> None:
        self.name: str = name
        self.body: Body = body
        self.generators: Optional[np.ndarray] = generators

    def rotated(self, rho: np.ndarray):
        gens = None if self.generators is None else self.generators @ rho.T
        return LoadedBody(f'{self.name} (rotated)', self.body.rotate(rho), gens)


def load_generators(path: str) -> np.ndarray:
    """Zonotope generators from a JSON list of segments or an object with a 'generators' list"""
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if isinstance(data, dict):
        data = data['generators']
    return np.array(data, dtype=float)


def load_body(name: str, d: Optional[int] = None) -> LoadedBody:
    """Builtin body by name, zono:<file>, or a polytope JSON file"""
    builtins: Dict[str, Tuple[Callable[[], Body], Optional[np.ndarray]]] = {
        'cube3': (lambda: Polytope.make_box(3), np.eye(3)),
        'cube4': (lambda: Polytope.make_box(4), np.eye(4)),
        'simplex3': (lambda: Polytope.make_simplex(3), None),
        'cross4': (lambda: Polytope.make_cross(4), None),
        'square4d': (Polytope.make_square4d, None),
        'ball3': (lambda: Ball(3), None),
        'ball4': (lambda: Ball(4), None),
    }
    if name == 'ball':
        if d is None:
            raise ValueError('ball needs the dimension of the other body')
        return LoadedBody(name, Ball(d))
    if name in builtins:
        make, gens = builtins[name]
        return LoadedBody(name, make(), gens)
    if name.startswith('zono:'):
        gens = load_generators(name[len('zono:'):])
        return LoadedBody(name, Polytope.make_zonotope(gens), gens)
    return LoadedBody(name, Polytope.open(name))


def load_pair(name_k: str, name_l: str) -> Tuple[LoadedBody, LoadedBody]:
    if name_k == 'ball' and name_l == 'ball':
        raise ValueError('at least one body needs a dimension')
    if name_k == 'ball':
        second = load_body(name_l)
        return load_body(name_k, second.body.d), second
    first = load_body(name_k)
    return first, load_body(name_l, first.body.d)


def oracle_value(K: LoadedBody, L: LoadedBody, k: int) -> Optional[Tuple[float, str]]:
    """Reference V_{k,l}(K, L) = C(d,k) V(K[k], -L[d-k]) when one of the oracles applies"""
    d = K.body.d
    if isinstance(L.body, Ball) and isinstance(K.body, Polytope):
        return Oracle.ball_identity(K.body, k), 'ball identity'
    if isinstance(K.body, Ball) and isinstance(L.body, Polytope):
        return Oracle.ball_identity(L.body, d - k), 'ball identity'
    if K.generators is not None and L.generators is not None:
        return Oracle.zonotope_mixed(K.generators, L.generators, k), 'zonotope'
    if d == 3 and isinstance(K.body, Polytope) and isinstance(L.body, Polytope):
        return Oracle.minkowski_poly_3d(K.body, L.body).values[k], 'minkowski fit'
    return None


def phi_table(run: RunConfig, d: int, k: int, exact: bool) -> PhiTable:
    return PhiTable.cached(d, k, run.mc.spawn(3), exact=exact, cache_dir=run.cache_dir)


def cmd_constants(args: argparse.Namespace, run: RunConfig) -> Tuple[Dict[str, Any], List[Check]]:
    d, k = args.d, args.k
    if d < 2 or not 1 <= k <= d - 1:
        raise ValueError(f'invalid constant indices d={d} k={k}')
    c, errors, provenance = Constants.c_constants(d, k, run.mc, exact=args.exact_c)
    D = Constants.d_matrix(d, k, c)
    table = phi_table(run, d, k, args.exact_c)
    tilde, gamma = Constants.gamma_consts(d, k)

    report = {
        'd': d,
        'k': k,
        'beta': Constants.beta_const(d, k),
        'gamma_tilde': tilde,
        'gamma': gamma,
        'c': c.tolist(),
        'c_errors': [float(e) for e in errors],
        'c_provenance': [p.value for p in provenance],
        'D': D.tolist(),
        'table': table.to_dict(),
    }
    report['table']['kron'] = table.kron.tolist()
    return report, []


def cmd_mixedvol(args: argparse.Namespace, run: RunConfig) -> Tuple[Dict[str, Any], List[Check]]:
    K, L = load_pair(args.K, args.L)
    d, k = K.body.d, args.k
    if args.rotate_K:
        K = K.rotated(Grassmann.sample_rotation(d, run.mc.rng(ROTATE_K_STREAM)))
    if args.rotate_L:
        L = L.rotated(Grassmann.sample_rotation(d, run.mc.rng(ROTATE_L_STREAM)))

    mode = Mode(args.mode)
    table = None
    if mode is not Mode.DIRECT_IR:
        table = phi_table(run, d, k, args.constants == 'exact')

    # V_{k,l}(K, L) = C(d,k) V(K[k], -L[l])
    request = MixedVolumeRequest(K.body, L.body, k, eps=args.eps, config=run.mc, mode=mode,
                                 assume_rotation=args.assume_rotation)
    estimate = MixedVolume.run(request, table)
    report: Dict[str, Any] = {
        'K': K.name,
        'L': L.name,
        'd': d,
        'k': k,
        'mode': mode.value,
        'mixed_volume': estimate.to_dict(),
        'provenance': None if table is None else {key: [p.value for p in value]
                                                   for key, value in table.provenance.items()},
    }

    checks = []
    if args.oracle:
        reference = oracle_value(K, L, k)
        if reference is None:
            log.warning('no oracle applies to %s and %s', K.name, L.name)
        else:
            value, method = reference
            checks.append(Check.against(f'oracle ({method})', estimate, value, rel=ORACLE_REL))
            report['oracle'] = {'value': value, 'method': method}
    return report, checks


def verify_items(run: RunConfig) -> Dict[str, Callable[[], List[Check]]]:
    """The d=4, k=l=2 verification suite, item name -> checks"""
    mc = run.mc

    def exact42():
        return PhiTable.build(4, 2, exact=True)

    def c3():
        c, errors, _ = Constants.c_constants(3, 1, mc)
        return [Check('c^3_1', c, np.array([1 / 5, 1 / 15]), std_error=float(np.max(errors)))]

    def d31():
        c, _, _ = Constants.c_constants(3, 1, mc)
        expected = np.array([[3, 1], [2, 4]]) / 15
        return [Check.compare('D(3,1) from sampled c', Constants.d_matrix(3, 1, c), expected, 2e-3),
                Check.compare('D(3,1) exact', Constants.d_matrix(3, 1, Constants.exact_c(3, 1)), expected, 1e-12)]

    def kron():
        expected = np.array([[9, 3, 3, 1], [6, 12, 2, 4], [6, 2, 12, 4], [4, 8, 8, 16]]) / 225
        return [Check.compare('D(3,1) x D(3,1)', exact42().kron, expected, 1e-12)]

    def alpha():
        expected = math.pi ** 2 * np.array([[16, -4], [-4, 1]])
        sampled = PhiTable.build(4, 2, mc)
        return [Check.compare('alpha exact', exact42().alpha, expected, 1e-10 * 16 * math.pi ** 2),
                Check.compare('alpha from sampled c', sampled.alpha, expected, 1e-2 * 16 * math.pi ** 2)]

    def phi22():
        table = exact42()
        rng = mc.rng(21)
        n = 1000
        u = Grassmann.sample_sphere(4, rng, size=n)
        v = Grassmann.sample_sphere(4, rng, size=n)
        U = Grassmann.sample_orthogonal(u, 1, rng)
        V = Grassmann.sample_orthogonal(v, 1, rng)
        diff = np.abs(table.phi_array(u, U, v, V) - PhiTable.phi22_angles(u, U, v, V)).max()
        return [Check.compare('phi^{2,2} closed form', float(diff), 0.0, 1e-8)]

    def neugl():
        cube, square = Polytope.make_box(3), Polytope.make_square4d()
        checks = [Check.against(f'Omega_{k}(cube3) mass', FlagMeasure.omega_integrate(cube, k, None, mc), 3.0)
                  for k in (1, 2)]
        checks.append(Check.against('Omega_2(square4d) mass', FlagMeasure.omega_integrate(square, 2, None, mc), 1.0))
        checks.append(Check.against('Omega_2(square4d) circle form', FlagMeasure.omega_square4d(None, mc), 1.0))
        ball = Ball(4)
        checks.append(Check.against('Omega_2(ball4) mass', FlagMeasure.omega_integrate(ball, 2, None, mc),
                                    ball.intrinsic_volume(2)))
        return checks

    def pdint():
        small = mc.replace(sample_count=max(1, mc.sample_count // 10))
        return [PhiTable.build(d, k, exact=True).verify_pdint(small.spawn(i))
                for d, k in ((3, 1), (4, 2)) for i in range(3)]

    def region():
        return [Check.against('region integral', MixedVolume.region_integral(mc), MixedVolume.region_target())]

    def lower_bound():
        u = np.array([0, 0, 1.0, 0])
        v = np.array([0, 0, math.cos(1.0), math.sin(1.0)])
        return [MixedVolume.negative_part_bound(u, v, exact42(), mc)]

    def f22_limit():
        beta = math.pi - 1e-3
        return [Check.compare('F_{2,2} sin^3 limit', Constants.F_kl(beta, 2, 2) * math.sin(beta) ** 3,
                              1 / (4 * math.pi), 1e-4)]

    def divergence():
        return MixedVolume.divergence_scan(DIVERGENCE_GRID, mc, exact42()).checks()

    return {
        'c3': c3,
        'd31': d31,
        'kron': kron,
        'alpha': alpha,
        'phi22': phi22,
        'neugl': neugl,
        'pdint': pdint,
        'region': region,
        'lower-bound': lower_bound,
        'f22-limit': f22_limit,
        'divergence': divergence,
    }


VERIFY_ITEMS = ('c3', 'd31', 'kron', 'alpha', 'phi22', 'neugl', 'pdint', 'region', 'lower-bound', 'f22-limit',
                'divergence')


def cmd_verify_paper(args: argparse.Namespace, run: RunConfig) -> Tuple[Dict[str, Any], List[Check]]:
    items = verify_items(run)
    selected = args.item or list(VERIFY_ITEMS)
    checks: List[Check] = []
    results: Dict[str, List[Dict[str, Any]]] = {}
    for name in selected:
        log.info('running %s', name)
        found = items[name]()
        results[name] = [c.to_dict() for c in found]
        checks.extend(found)

    report = {'items': results, 'passed': all(checks)}
    if args.json:
        with open(args.json, 'w', encoding='utf-8') as f:
            json.dump({'version': REPORT_VERSION, 'run': run.to_dict(), 'items': results}, f, indent=1,
                      sort_keys=True)
    return report, checks


def render(run: RunConfig, report: Dict[str, Any], checks: Sequence[Check]) -> str:
    """Report text in the requested format"""
    if run.fmt == 'json':
        data = {'version': REPORT_VERSION, 'run': run.to_dict(), 'report': report,
                'checks': [c.to_dict() for c in checks]}
        return json.dumps(data, indent=1, sort_keys=True, default=_json_default) + '\n'

    if run.fmt == 'csv':
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        if checks:
            writer.writerow(['name', 'value', 'expected', 'std_error', 'tolerance', 'passed'])
            for c in checks:
                row = c.to_dict()
                writer.writerow([row['name'], json.dumps(row['value']), json.dumps(row['expected']),
                                 row['std_error'], row['tolerance'], row['passed']])
        else:
            writer.writerow(['key', 'value'])
            for key, value in _flatten(report):
                writer.writerow([key, value])
        return out.getvalue()

    lines = [f'{key}: {value}' for key, value in _flatten(report) if not key.startswith('items.')]
    lines += [str(c) for c in checks]
    return '\n'.join(lines) + '\n'


def _flatten(data: Any, prefix: str = '') -> List[Tuple[str, Any]]:
    if isinstance(data, dict):
        return [row for key, value in data.items() for row in _flatten(value, f'{prefix}{key}.')]
    return [(prefix.rstrip('.'), data)]


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f'cannot serialise {type(value).__name__}')


def build_parser(defaults: Optional[Dict[str, Any]] = None) -> argparse.ArgumentParser:
    """Argument parser; defaults (from --config) override the built-in option defaults"""
    defaults = {key.replace("-", "_"): value for key, value in (defaults or {}).items()}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--samples', type=int, help='Monte Carlo sample count')
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--threads', type=int, default=1)
    common.add_argument('--batches', type=int, default=4, help='Monte Carlo batch count')
    common.add_argument('--cache-dir', help=f'phi table cache (default ${CACHE_ENV} or {DEFAULT_CACHE_DIR})')
    common.add_argument('--no-cache', action='store_true', help='do not read or write the phi table cache')
    common.add_argument('--config', help='JSON file of option defaults')
    common.add_argument('--output', help='write the report here instead of stdout')
    common.add_argument('--format', choices=FORMATS, default='text')
    common.add_argument('-v', '--verbose', action='count', default=0)

    parser = argparse.ArgumentParser(prog='flagmixvol',
                                     description='Mixed volumes of convex bodies through flag measures')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('constants', parents=[common], help='moment constants, D matrices and alpha')
    p.add_argument('--d', type=int, required=True)
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--exact-c', action='store_true', help='use closed-form moment constants where known')
    p.set_defaults(func=cmd_constants, samples=1_000_000)
    p.set_defaults(**defaults)

    p = sub.add_parser('mixedvol', parents=[common], help='mixed volume of two bodies')
    p.add_argument('--K', required=True, help='builtin name, zono:<file> or polytope JSON file')
    p.add_argument('--L', required=True, help='builtin name, zono:<file> or polytope JSON file')
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--rotate-K', action='store_true', help='apply a random rotation to K')
    p.add_argument('--rotate-L', action='store_true', help='apply a random rotation to L')
    p.add_argument('--mode', choices=[m.value for m in Mode], default=Mode.FLAG_IR2.value)
    p.add_argument('--eps', type=float, help='angular cut-off for flag_IR1')
    p.add_argument('--assume-rotation', action='store_true',
                   help='accept the uncut representation for bodies in almost every relative rotation')
    p.add_argument('--constants', choices=['exact', 'mc'], default='exact')
    p.add_argument('--oracle', action='store_true', help='compare with an independent reference value')
    p.set_defaults(func=cmd_mixedvol, samples=200_000)
    p.set_defaults(**defaults)

    p = sub.add_parser('verify-paper', parents=[common], help='verification suite for d=4, k=l=2')
    p.add_argument('--item', action='append', choices=VERIFY_ITEMS, help='run only this item (repeatable)')
    p.add_argument('--json', help='also write the pass/fail ledger as JSON here')
    p.set_defaults(func=cmd_verify_paper, samples=1_000_000)
    p.set_defaults(**defaults)

    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse the command line, taking option defaults from --config when given"""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config')
    known, _ = pre.parse_known_args(argv)

    defaults = None
    if known.config:
        with open(known.config, 'r', encoding='utf-8') as f:
            defaults = json.load(f)
        if not isinstance(defaults, dict):
            raise json.JSONDecodeError('config file should hold a JSON object', known.config, 0)
    return build_parser(defaults).parse_args(argv)


def run_command(args: argparse.Namespace) -> int:
    run = RunConfig.from_args(args)
    report, checks = args.func(args, run)
    text = render(run, report, checks)
    if run.output:
        with open(run.output, 'w', encoding='utf-8') as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(checks) else EXIT_NUMERIC


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except (OSError, json.JSONDecodeError) as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_IO

    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')

    try:
        return run_command(args)
    except PreconditionError as e:
        log.error('precondition failed: %s', e)
        return EXIT_PRECONDITION
    except NonFiniteSampleError as e:
        log.error('%s', e)
        return EXIT_NUMERIC
    except json.JSONDecodeError as e:
        log.error('malformed JSON input: %s', e)
        return EXIT_IO
    except (OSError, KeyError) as e:
        log.error('cannot read input: %s', e)
        return EXIT_IO
    except (RuntimeError, np.linalg.LinAlgError) as e:
        log.error('numeric failure: %s', e)
        return EXIT_NUMERIC
    except ValueError as e:
        log.error('invalid argument: %s', e)
        return EXIT_PRECONDITION

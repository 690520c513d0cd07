"""
Static SVG line charts rendered through the Django template engine.

Every chart has fixed dimensions and coordinates are printed with a fixed precision, so the
same aggregate always renders to the same bytes.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from django.template.loader import render_to_string

logger = logging.getLogger(__name__)

WIDTH = 640
HEIGHT = 400
MARGIN = {'left': 70, 'right': 150, 'top': 40, 'bottom': 50}
TICKS = 5
PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd',
           '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf')
TEMPLATE = 'lab/charts/line_chart.svg'

REGRET = 'regret'
RELATIVE_IMPROVEMENT = 'relative-improvement'
WIDTH_CHART = 'width'
PLOT_KINDS = (REGRET, RELATIVE_IMPROVEMENT, WIDTH_CHART)
BASELINE = 'ucbvi'


@dataclass(frozen=True)
class Series:
    label: str
    xs: tuple
    ys: tuple


def _bounds(values):
    low, high = float(min(values)), float(max(values))
    if high - low < 1e-12:
        pad = max(abs(low) * 0.1, 0.5)
        return low - pad, high + pad
    return low, high


def _tick_label(value):
    return f'{value:.3g}'


def line_chart(series, title, x_label, y_label):
    """
    Render series as an SVG document: one polyline per series, a legend and labelled axes

    Args:
        series: list of Series, each with at least one point
        title: chart title
        x_label: x axis label
        y_label: y axis label

    Returns:
        str: the SVG markup
    """
    x_low, x_high = _bounds([x for s in series for x in s.xs])
    y_low, y_high = _bounds([y for s in series for y in s.ys])
    plot_w = WIDTH - MARGIN['left'] - MARGIN['right']
    plot_h = HEIGHT - MARGIN['top'] - MARGIN['bottom']

    def px(x):
        return MARGIN['left'] + (x - x_low) / (x_high - x_low) * plot_w

    def py(y):
        return MARGIN['top'] + plot_h - (y - y_low) / (y_high - y_low) * plot_h

    context = {
        'width': WIDTH,
        'height': HEIGHT,
        'title': title,
        'title_x': f'{MARGIN["left"] + plot_w / 2:.2f}',
        'x_label': x_label,
        'y_label': y_label,
        'left': MARGIN['left'],
        'right': MARGIN['left'] + plot_w,
        'top': MARGIN['top'],
        'bottom': MARGIN['top'] + plot_h,
        'x_label_y': HEIGHT - 10,
        'y_label_y': f'{MARGIN["top"] + plot_h / 2:.2f}',
        'legend_x': MARGIN['left'] + plot_w + 15,
        'x_ticks': [{'pos': f'{px(v):.2f}', 'label': _tick_label(v)}
                    for v in np.linspace(x_low, x_high, TICKS)],
        'y_ticks': [{'pos': f'{py(v):.2f}', 'label': _tick_label(v)}
                    for v in np.linspace(y_low, y_high, TICKS)],
        'series': [{
            'label': s.label,
            'color': PALETTE[i % len(PALETTE)],
            'points': ' '.join(f'{px(x):.2f},{py(y):.2f}' for x, y in zip(s.xs, s.ys)),
            'legend_y': MARGIN['top'] + 18 * i,
        } for i, s in enumerate(series)],
    }
    return render_to_string(TEMPLATE, context)


def _param_label(labels, param):
    return 'baseline' if param is None else f'{labels.get("param", "x")}={param:g}'


def regret_charts(aggregate):
    """Mean cumulative regret against episodes, one chart per shaped learner."""
    curves = aggregate.curves
    baseline = [c for c in curves if c['algorithm'] == BASELINE]
    shaped = sorted({c['algorithm'] for c in curves} - {BASELINE})
    charts = {}
    for algorithm in shaped or [BASELINE]:
        chosen = [c for c in curves if c['algorithm'] == algorithm]
        if algorithm != BASELINE:
            chosen = chosen + baseline
        series = []
        for c in chosen:
            label = c['algorithm']
            if c['param'] is not None and aggregate.tag != 'single-run':
                label = f'{label} {_param_label(aggregate.labels, c["param"])}'
            series.append(Series(label, tuple(c['episodes']), tuple(c['mean_cumulative_regret'])))
        if series:
            charts[f'regret_{algorithm}.svg'] = (series, f'Cumulative regret: {algorithm}',
                                                 'episode', 'mean cumulative regret')
    return charts


def relative_improvement_charts(aggregate):
    """Mean relative regret improvement over UCBVI against the grid parameter."""
    summary = aggregate.summary
    if summary.empty or 'mean_improvement' not in summary:
        return {}
    rows = summary[(summary['algorithm'] != BASELINE) & summary['mean_improvement'].notna()]
    series = []
    for algorithm, group in rows.groupby('algorithm', sort=True):
        group = group.sort_values('param')
        series.append(Series(algorithm, tuple(group['param']), tuple(group['mean_improvement'])))
    if not series:
        return {}
    return {'relative_improvement.svg': (series, 'Relative regret improvement over UCBVI',
                                         aggregate.labels.get('param', 'x'), 'improvement')}


def width_charts(aggregate):
    """Median D^max against the number of offline trajectories."""
    summary = aggregate.summary
    if summary.empty or 'median_d_max' not in summary:
        return {}
    rows = summary[summary['algorithm'] == 'envelope'].sort_values('param')
    if rows.empty:
        return {}
    series = [Series('median D^max', tuple(rows['param']), tuple(rows['median_d_max']))]
    return {'width.svg': (series, 'Envelope width against K', 'K', 'median D^max')}


BUILDERS = {
    REGRET: regret_charts,
    RELATIVE_IMPROVEMENT: relative_improvement_charts,
    WIDTH_CHART: width_charts,
}
DEFAULT_KINDS = {
    'k-sweep': (REGRET,),
    'expanding-range': (RELATIVE_IMPROVEMENT,),
    'sliding-range': (RELATIVE_IMPROVEMENT,),
    'single-run': (REGRET,),
    'width-sweep': (WIDTH_CHART,),
}


def emit_plots(aggregate, out_dir, kind=None):
    """
    Write the SVG charts of an aggregate into out_dir

    Args:
        aggregate: AggregateResult
        out_dir: target directory
        kind: one of PLOT_KINDS, or None for the experiment's default charts

    Returns:
        list: paths of the written files (empty when there is nothing to plot)
    """
    kinds = (kind,) if kind else DEFAULT_KINDS.get(aggregate.tag, ())
    written = []
    for name in kinds:
        if name not in BUILDERS:
            raise ValueError(f'Unknown plot kind {name!r}; expected one of {", ".join(PLOT_KINDS)}.')
        charts = BUILDERS[name](aggregate)
        if not charts:
            logger.warning('Nothing to plot for %s (%s aggregate is empty)', name, aggregate.tag)
            continue
        for filename, (series, title, x_label, y_label) in charts.items():
            path = Path(out_dir) / filename
            path.write_text(line_chart(series, title, x_label, y_label), encoding='utf-8')
            written.append(path)
            logger.info('Wrote %s', path)
    return written

/**
 * Dependency-free SVG sweep charts: step paths for integer designs and
 * plain polylines for decimal benchmarks, one panel per measure.
 */

import type { SweepRow } from './types'

export interface Series {
  label: string
  points: { x: number; y: number }[]
  step: boolean
}

const WIDTH = 480
const HEIGHT = 220
const PAD = 36

function scale(values: number[], lo: number, hi: number): (v: number) => number {
  const min = Math.min(...values)
  const max = Math.max(...values)
  const span = max - min || 1
  return (v) => lo + ((v - min) / span) * (hi - lo)
}

/** Piecewise-constant path: hold each y until the next x. */
export function stepPath(points: { x: number; y: number }[]): string {
  if (points.length === 0) return ''
  const parts = [`M ${points[0].x.toFixed(2)} ${points[0].y.toFixed(2)}`]
  for (let i = 1; i < points.length; i += 1) {
    parts.push(`H ${points[i].x.toFixed(2)}`)
    parts.push(`V ${points[i].y.toFixed(2)}`)
  }
  return parts.join(' ')
}

export function linePath(points: { x: number; y: number }[]): string {
  if (points.length === 0) return ''
  return points
    .map((p, i) => `${i === 0 ? 'M' : 'L'} ${p.x.toFixed(2)} ${p.y.toFixed(2)}`)
    .join(' ')
}

export function buildChart(series: Series[], title: string): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x))
  const ys = series.flatMap((s) => s.points.map((p) => p.y))
  if (xs.length === 0) return `<svg role="img" aria-label="${title}"></svg>`
  const sx = scale(xs, PAD, WIDTH - PAD)
  const sy = scale(ys, HEIGHT - PAD, PAD)
  const colors = ['#4a4ad0', '#c05050', '#3a8a3a', '#8a6d20']
  const paths = series
    .map((s, i) => {
      const pts = s.points.map((p) => ({ x: sx(p.x), y: sy(p.y) }))
      const d = s.step ? stepPath(pts) : linePath(pts)
      const dash = s.step ? '' : ' stroke-dasharray="4 3"'
      return `<path d="${d}" fill="none" stroke="${colors[i % colors.length]}"` +
        ` stroke-width="1.6"${dash}><title>${s.label}</title></path>`
    })
    .join('')
  return (
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="${title}">` +
    `<text x="${WIDTH / 2}" y="16" text-anchor="middle" class="chart-title">${title}</text>` +
    paths +
    '</svg>'
  )
}

export function sweepCharts(rows: SweepRow[], axisLabel: string): string[] {
  const sizeSeries: Series[] = [
    { label: 'clusters (integer)', step: true, points: rows.map((r) => ({ x: r.axis, y: r.I })) },
    { label: 'cluster-period size (integer)', step: true, points: rows.map((r) => ({ x: r.axis, y: r.K })) },
  ]
  if (rows.some((r) => typeof r.decimalI === 'number')) {
    sizeSeries.push({
      label: 'clusters (decimal)',
      step: false,
      points: rows.filter((r) => typeof r.decimalI === 'number')
        .map((r) => ({ x: r.axis, y: r.decimalI as number })),
    })
    sizeSeries.push({
      label: 'cluster-period size (decimal)',
      step: false,
      points: rows.filter((r) => typeof r.decimalK === 'number')
        .map((r) => ({ x: r.axis, y: r.decimalK as number })),
    })
  }
  const isEfficiency = rows.some((r) => r.re !== undefined)
  const measureSeries: Series[] = [{
    label: isEfficiency ? 'worst-case RE (integer)' : 'power (integer)',
    step: true,
    points: rows.map((r) => ({ x: r.axis, y: (isEfficiency ? r.re : r.power) ?? NaN })),
  }]
  if (!isEfficiency && rows.some((r) => typeof r.decimalPower === 'number')) {
    measureSeries.push({
      label: 'power (decimal)',
      step: false,
      points: rows.filter((r) => typeof r.decimalPower === 'number')
        .map((r) => ({ x: r.axis, y: r.decimalPower as number })),
    })
  }
  return [
    buildChart(sizeSeries, `design size vs ${axisLabel}`),
    buildChart(measureSeries, `${isEfficiency ? 'efficiency' : 'power'} vs ${axisLabel}`),
  ]
}

// Browser entry point: wires the pure view models to the DOM. All state
// lives in QuerySession / the label-set draft; the service base URL is the
// only configuration.

import { ApiError, ServiceClient } from './api'
import { QuerySession, runSearch } from './session'
import type { LabelPrompt } from './types'
import { validateLabelSet } from './validate'
import { renderClassify, renderSearch } from './views'

const baseUrl = new URLSearchParams(window.location.search).get('service') ?? 'http://127.0.0.1:8000'
const client = new ServiceClient(baseUrl)
const session = new QuerySession()

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function showBanner(message: string | null) {
  const banner = el<HTMLDivElement>('banner')
  banner.textContent = message ?? ''
  banner.style.display = message ? 'block' : 'none'
}

function renderHistory() {
  const list = el<HTMLUListElement>('history')
  list.innerHTML = ''
  for (const entry of [...session.history].reverse().slice(0, 12)) {
    const item = document.createElement('li')
    const link = document.createElement('a')
    link.href = '#'
    link.textContent = `${entry.query} (k=${entry.k})`
    link.onclick = (event) => {
      event.preventDefault()
      el<HTMLInputElement>('query').value = entry.query
      void doSearch()
    }
    item.appendChild(link)
    list.appendChild(item)
  }
}

async function doSearch() {
  const query = el<HTMLInputElement>('query').value.trim()
  const k = Number(el<HTMLInputElement>('k').value) || 10
  if (!query) return
  showBanner(null)
  try {
    const payload = await runSearch(session, (q, kk) => client.search(q, kk), query, k)
    renderHistory()
    if (payload === null) return // stale response discarded
    const view = renderSearch(payload)
    const container = el<HTMLDivElement>('results')
    container.innerHTML = ''
    if (view.kind === 'empty') {
      container.textContent = view.message
      return
    }
    for (const row of view.rows) {
      const card = document.createElement('div')
      card.className = 'hit'
      const head = document.createElement('div')
      head.className = 'hit-head'
      head.textContent = `#${row.rank}  ${row.scoreText}  ${row.title ?? row.sourceId}`
      const seed = document.createElement('button')
      seed.textContent = 'use as query seed'
      seed.onclick = () => {
        el<HTMLInputElement>('query').value = row.querySeed
        void doSearch()
      }
      const pre = document.createElement('pre')
      pre.textContent = row.snippet.join('\n')
      card.append(head, seed, pre)
      container.appendChild(card)
    }
  } catch (error) {
    // session state is preserved; only the banner reflects the failure
    showBanner(error instanceof ApiError ? `service error ${error.code}: ${error.detail}` : `service unreachable: ${error}`)
  }
}

function draftRows(): LabelPrompt[] {
  return Array.from(el<HTMLTableSectionElement>('labels').rows).map((row) => ({
    label: (row.cells[0].firstChild as HTMLInputElement).value,
    prompt: (row.cells[1].firstChild as HTMLInputElement).value,
  }))
}

function addLabelRow(label = '', prompt = '') {
  const row = el<HTMLTableSectionElement>('labels').insertRow()
  for (const value of [label, prompt]) {
    const cell = row.insertCell()
    const input = document.createElement('input')
    input.value = value
    input.oninput = renderValidation
    cell.appendChild(input)
  }
  const cell = row.insertCell()
  const remove = document.createElement('button')
  remove.textContent = 'x'
  remove.onclick = () => {
    row.remove()
    renderValidation()
  }
  cell.appendChild(remove)
  renderValidation()
}

function renderValidation() {
  const issues = validateLabelSet(draftRows())
  el<HTMLDivElement>('draft-issues').textContent = issues.map((i) => i.message).join('; ')
  el<HTMLButtonElement>('classify-btn').disabled = issues.length > 0
}

async function doClassify() {
  const abc = el<HTMLTextAreaElement>('abc').value
  const draft = draftRows()
  if (validateLabelSet(draft).length > 0) return
  showBanner(null)
  try {
    const view = renderClassify(await client.classify(abc, draft))
    const container = el<HTMLDivElement>('classify-results')
    container.innerHTML = ''
    const headline = document.createElement('div')
    headline.textContent = `label: ${view.winner}${view.tie ? '  (tie)' : ''}`
    container.appendChild(headline)
    for (const bar of view.bars) {
      const row = document.createElement('div')
      row.className = 'bar-row' + (bar.isArgmax ? ' argmax' : '') + (bar.tied ? ' tied' : '')
      const fill = document.createElement('span')
      fill.className = 'bar'
      fill.style.width = `${Math.round(bar.fraction * 240)}px`
      row.append(fill, document.createTextNode(` ${bar.scoreText}  ${bar.label}${bar.tied ? ' (tie)' : ''}`))
      container.appendChild(row)
    }
  } catch (error) {
    showBanner(error instanceof ApiError ? `service error ${error.code}: ${error.detail}` : `service unreachable: ${error}`)
  }
}

export function boot() {
  el<HTMLButtonElement>('search-btn').onclick = () => void doSearch()
  el<HTMLInputElement>('query').onkeydown = (event) => {
    if (event.key === 'Enter') void doSearch()
  }
  el<HTMLButtonElement>('classify-btn').onclick = () => void doClassify()
  el<HTMLButtonElement>('add-label').onclick = () => addLabelRow()
  el<HTMLButtonElement>('load-genres').onclick = async () => {
    // the shipped WikiMT genre prompt set, fetched from a static copy
    const response = await fetch('./wikimt_genres.json')
    const records: { label: string; prompt: string }[] = await response.json()
    el<HTMLTableSectionElement>('labels').innerHTML = ''
    for (const record of records) addLabelRow(record.label, record.prompt)
  }
  addLabelRow()
  addLabelRow()
  void client
    .health()
    .then((h) => showBanner(null) ?? (el<HTMLSpanElement>('status').textContent = `service ok, ${String(h.config['count'])} pieces`))
    .catch(() => showBanner(`cannot reach service at ${baseUrl}`))
}

if (typeof document !== 'undefined') boot()

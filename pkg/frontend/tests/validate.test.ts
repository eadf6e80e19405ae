import { describe, expect, it } from 'vitest'

import { isValid, validateLabelSet } from '../src/validate'

describe('validateLabelSet', () => {
  const good = [
    { label: 'Jazz', prompt: 'improvisational music with swing' },
    { label: 'Rock', prompt: 'electric guitars and drums' },
  ]

  it('accepts a well-formed draft', () => {
    expect(validateLabelSet(good)).toEqual([])
    expect(isValid(good)).toBe(true)
  })

  it('blocks duplicate labels', () => {
    const draft = [...good, { label: 'Jazz', prompt: 'another prompt' }]
    const issues = validateLabelSet(draft)
    expect(issues.some((i) => i.field === 'label' && i.index === 2)).toBe(true)
    expect(isValid(draft)).toBe(false)
  })

  it('blocks empty prompts', () => {
    const draft = [good[0], { label: 'Rock', prompt: '   ' }]
    const issues = validateLabelSet(draft)
    expect(issues.some((i) => i.field === 'prompt' && i.index === 1)).toBe(true)
  })

  it('blocks empty labels', () => {
    const draft = [good[0], { label: '', prompt: 'fine prompt' }]
    expect(validateLabelSet(draft).some((i) => i.field === 'label')).toBe(true)
  })

  it('requires at least two labels', () => {
    expect(validateLabelSet([good[0]]).some((i) => i.field === 'set')).toBe(true)
    expect(validateLabelSet([]).some((i) => i.field === 'set')).toBe(true)
  })

  it('duplicate detection trims whitespace', () => {
    const draft = [good[0], { label: ' Jazz ', prompt: 'p' }]
    expect(validateLabelSet(draft).some((i) => i.message.includes('duplicate'))).toBe(true)
  })
})

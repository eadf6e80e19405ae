// Label-set draft validation, mirroring the service's invariants so bad
// drafts are blocked before submission.

import type { LabelPrompt } from './types'

export type DraftIssue = {
  index: number // -1 for set-level issues
  field: 'label' | 'prompt' | 'set'
  message: string
}

export function validateLabelSet(draft: LabelPrompt[]): DraftIssue[] {
  const issues: DraftIssue[] = []
  if (draft.length < 2) {
    issues.push({ index: -1, field: 'set', message: 'need at least 2 labels' })
  }
  const seen = new Map<string, number>()
  draft.forEach((row, index) => {
    const label = row.label.trim()
    if (!label) {
      issues.push({ index, field: 'label', message: 'label must not be empty' })
    } else if (seen.has(label)) {
      issues.push({ index, field: 'label', message: `duplicate label "${label}" (first at row ${seen.get(label)! + 1})` })
    } else {
      seen.set(label, index)
    }
    if (!row.prompt.trim()) {
      issues.push({ index, field: 'prompt', message: 'prompt must not be empty' })
    }
  })
  return issues
}

export function isValid(draft: LabelPrompt[]): boolean {
  return validateLabelSet(draft).length === 0
}

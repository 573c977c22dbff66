"""Entrées / sorties fichiers : formats CSV texte et figures SVG."""

"""Services module initialization"""
